#pragma once

#include "pivotfit/signal.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pivotfit {

struct RecordFormat {
  char delimiter = ',';
  std::size_t displacement_column = 0;  // 0-based
  std::size_t load_column = 1;          // 0-based
};

/// Number formatting for every emitted table: 9 significant digits, `,` delimiter, LF.
struct TableFormat {
  int precision = 9;
  std::string displacement_label = "displacement";
  std::string load_label = "load";
};

/// Reads a delimiter-separated record. A single non-numeric first row is taken as a header.
/// Throws IoError when the file is missing and ValidationError (naming the 1-based line) otherwise.
SignalPair load_record(const std::filesystem::path& path, const RecordFormat& format = {});
SignalPair parse_record(std::istream& in, const RecordFormat& format = {}, const std::string& source = "<stream>");

/// Returns `pair` unchanged when every invariant holds; otherwise throws a ValidationError
/// carrying one issue per violated invariant.
const SignalPair& validate(const SignalPair& pair);

/// Non-throwing form of validate().
std::vector<std::string> check(const SignalPair& pair);

std::string format_number(double value, int precision = 9);

void write_record(std::ostream& out, const SignalPair& pair, const TableFormat& format = {});
void write_record(const std::filesystem::path& path, const SignalPair& pair, const TableFormat& format = {});

/// Writes a header and rows of equal width. Throws IoError if the file cannot be created.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, int precision = 9);
void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, int precision = 9);

}  // namespace pivotfit
