#include "pivotfit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pivotfit {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += issue;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

bool parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

ValidationError::ValidationError(const std::string& what, std::vector<std::string> issues)
    : Error(what), issues_(std::move(issues)) {}

SignalPair parse_record(std::istream& in, const RecordFormat& format, const std::string& source) {
  std::vector<double> displacement;
  std::vector<double> load;
  const std::size_t needed = std::max(format.displacement_column, format.load_column) + 1;

  std::string line;
  std::size_t line_number = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_number;
    const auto content = trim(line);
    if (content.empty()) continue;

    const auto cells = split(content, format.delimiter);
    double d = 0.0;
    double l = 0.0;
    const bool enough = cells.size() >= needed;
    const bool numeric = enough && parse_double(cells[format.displacement_column], d) &&
                         parse_double(cells[format.load_column], l);
    if (!numeric) {
      if (!seen_content && enough) {
        seen_content = true;  // header row
        continue;
      }
      std::ostringstream msg;
      msg << source << ": line " << line_number << ": ";
      if (!enough)
        msg << "expected at least " << needed << " columns, found " << cells.size();
      else
        msg << "non-numeric value in a designated column";
      throw ValidationError(msg.str(), {msg.str()});
    }
    seen_content = true;
    displacement.push_back(d);
    load.push_back(l);
  }

  if (displacement.size() < 2) {
    std::ostringstream msg;
    msg << source << ": line " << std::max<std::size_t>(line_number, 1) << ": record too short ("
        << displacement.size() << " data rows, at least 2 required)";
    throw ValidationError(msg.str(), {msg.str()});
  }

  auto pair = make_signal(displacement, load);
  const auto issues = check(pair);
  if (!issues.empty()) throw ValidationError(source + ": " + join_issues(issues), issues);
  return pair;
}

SignalPair load_record(const std::filesystem::path& path, const RecordFormat& format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path.string());
  return parse_record(in, format, path.string());
}

std::vector<std::string> check(const SignalPair& pair) {
  std::vector<std::string> issues;
  const auto nd = pair.displacement.size();
  const auto nl = pair.load.size();
  if (nd != nl) {
    issues.push_back("length mismatch: displacement has " + std::to_string(nd) + " samples, load has " +
                     std::to_string(nl) + " (first unmatched index " + std::to_string(std::min(nd, nl)) + ")");
  }
  if (std::min(nd, nl) < 2) {
    issues.push_back("record too short: " + std::to_string(std::min(nd, nl)) + " samples, at least 2 required");
  }
  for (Eigen::Index i = 0; i < nd; ++i) {
    if (!std::isfinite(pair.displacement[i])) {
      issues.push_back("non-finite displacement at index " + std::to_string(i));
      break;
    }
  }
  for (Eigen::Index i = 0; i < nl; ++i) {
    if (!std::isfinite(pair.load[i])) {
      issues.push_back("non-finite load at index " + std::to_string(i));
      break;
    }
  }
  return issues;
}

const SignalPair& validate(const SignalPair& pair) {
  auto issues = check(pair);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return pair;
}

std::string format_number(double value, int precision) {
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, value);
  return buf;
}

void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, int precision) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i], precision);
    out << '\n';
  }
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, int precision) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write output file: " + path.string());
  write_table(out, header, rows, precision);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_record(std::ostream& out, const SignalPair& pair, const TableFormat& format) {
  out << format.displacement_label << ',' << format.load_label << '\n';
  for (Eigen::Index i = 0; i < pair.size(); ++i) {
    out << format_number(pair.displacement[i], format.precision) << ','
        << format_number(pair.load[i], format.precision) << '\n';
  }
}

void write_record(const std::filesystem::path& path, const SignalPair& pair, const TableFormat& format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write output file: " + path.string());
  write_record(out, pair, format);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pivotfit
