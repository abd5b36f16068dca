#include "pivotfit/pipeline.hpp"

#include "pivotfit/backbone.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pivotfit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Interrupted&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(stage + ": " + e.what(), e.issues());
  } catch (const IoError& e) {
    throw IoError(stage + ": " + e.what());
  } catch (const OptimizationError& e) {
    throw OptimizationError(stage + ": " + e.what());
  }
}

void ensure_outdir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".pivotfit-write-test";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::string label(const std::string& name, const std::string& unit) {
  return unit.empty() ? name : name + " (" + unit + ")";
}

TableFormat table_format(const PipelineConfig& c) {
  return {c.precision, label("displacement", c.displacement_unit), label("load", c.load_unit)};
}

fs::path or_default(const fs::path& given, const fs::path& fallback) { return given.empty() ? fallback : given; }

fs::path resampled_path(const PipelineConfig& c) { return or_default(c.resampled_file, c.outdir / "resampled.csv"); }
fs::path backbone_path(const PipelineConfig& c) { return or_default(c.backbone_file, c.outdir / "idealized.csv"); }
fs::path params_path(const PipelineConfig& c) { return or_default(c.params_file, c.outdir / "best_params.txt"); }

// Stage outputs always use the default layout, whatever the column mapping of the raw input.
SignalPair load_stage_file(const fs::path& path) { return load_record(path, RecordFormat{}); }

void write_response(const PipelineConfig& c, const SignalPair& resampled, const Eigen::VectorXd& simulated) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(resampled.size()));
  for (Eigen::Index i = 0; i < resampled.size(); ++i)
    rows.push_back({resampled.displacement[i], simulated[i], resampled.load[i]});
  write_table(c.outdir / "response.csv",
              {label("displacement", c.displacement_unit), label("simulated_load", c.load_unit),
               label("experimental_load", c.load_unit)},
              rows, c.precision);
}

void write_convergence(const PipelineConfig& c, const ConvergenceHistory& history) {
  std::vector<std::vector<double>> rows;
  for (const auto& g : history.generations) {
    rows.push_back({static_cast<double>(g.generation), g.best_score, g.mean_score, g.best.alpha1, g.best.alpha2,
                    g.best.beta1, g.best.beta2, g.best.eta});
  }
  write_table(c.outdir / "convergence.csv",
              {"generation", "best_score", "mean_score", "alpha1", "alpha2", "beta1", "beta2", "eta"}, rows,
              c.precision);
}

std::vector<std::string> backbone_warnings(const IdealizedBackbone& b) {
  std::vector<std::string> w;
  if (b.positive_yield_at_peak) w.push_back("positive yield point coincides with the peak-load point");
  if (b.negative_yield_at_peak) w.push_back("negative yield point coincides with the peak-load point");
  return w;
}

int param_index(const std::string& name) {
  for (int j = 0; j < 5; ++j) {
    if (name == PivotParams::names[j]) return j;
  }
  throw ValidationError({"unknown parameter name: '" + name + "'"});
}

}  // namespace

json to_json(const PipelineConfig& c) {
  json bounds = json::object();
  for (int j = 0; j < 5; ++j) bounds[PivotParams::names[j]] = {c.ga.bounds.lower[j], c.ga.bounds.upper[j]};
  return {
      {"input", c.input.generic_string()},
      {"outdir", c.outdir.generic_string()},
      {"delimiter", std::string(1, c.format.delimiter)},
      {"displacement_column", c.format.displacement_column},
      {"load_column", c.format.load_column},
      {"step", c.step.m},
      {"scale", c.scale.scale},
      {"precision", c.precision},
      {"units", {{"displacement", c.displacement_unit}, {"load", c.load_unit}}},
      {"ga",
       {{"population", c.ga.population_size},
        {"generations", c.ga.max_generations},
        {"tournament", c.ga.tournament_size},
        {"crossover_probability", c.ga.crossover_probability},
        {"blend_alpha", c.ga.blend_alpha},
        {"mutation_probability", c.ga.mutation_probability},
        {"mutation_scale", c.ga.mutation_scale},
        {"elite", c.ga.elite_count},
        {"seed", c.ga.rng_seed},
        {"stall", c.ga.stall_generations},
        {"bounds", bounds}}},
  };
}

void apply_json(const json& j, PipelineConfig& c) {
  try {
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("outdir")) c.outdir = j.at("outdir").get<std::string>();
    if (j.contains("delimiter")) {
      auto d = j.at("delimiter").get<std::string>();
      if (d == "\\t" || d == "tab") d = "\t";
      if (d.size() != 1) throw ValidationError({"delimiter must be a single character"});
      c.format.delimiter = d[0];
    }
    if (j.contains("displacement_column")) c.format.displacement_column = j.at("displacement_column").get<std::size_t>();
    if (j.contains("load_column")) c.format.load_column = j.at("load_column").get<std::size_t>();
    if (j.contains("step")) c.step.m = j.at("step").get<Eigen::Index>();
    if (j.contains("scale")) c.scale.scale = j.at("scale").get<long>();
    if (j.contains("precision")) c.precision = j.at("precision").get<int>();
    if (j.contains("units")) {
      const auto& u = j.at("units");
      if (u.contains("displacement")) c.displacement_unit = u.at("displacement").get<std::string>();
      if (u.contains("load")) c.load_unit = u.at("load").get<std::string>();
    }
    if (j.contains("ga")) {
      const auto& g = j.at("ga");
      auto& ga = c.ga;
      if (g.contains("population")) ga.population_size = g.at("population").get<int>();
      if (g.contains("generations")) ga.max_generations = g.at("generations").get<int>();
      if (g.contains("tournament")) ga.tournament_size = g.at("tournament").get<int>();
      if (g.contains("crossover_probability")) ga.crossover_probability = g.at("crossover_probability").get<double>();
      if (g.contains("blend_alpha")) ga.blend_alpha = g.at("blend_alpha").get<double>();
      if (g.contains("mutation_probability")) ga.mutation_probability = g.at("mutation_probability").get<double>();
      if (g.contains("mutation_scale")) ga.mutation_scale = g.at("mutation_scale").get<double>();
      if (g.contains("elite")) ga.elite_count = g.at("elite").get<int>();
      if (g.contains("seed")) ga.rng_seed = g.at("seed").get<std::uint64_t>();
      if (g.contains("stall")) ga.stall_generations = g.at("stall").get<int>();
      if (g.contains("threads")) ga.threads = g.at("threads").get<int>();
      if (g.contains("bounds")) {
        for (const auto& [name, range] : g.at("bounds").items()) {
          const int index = param_index(name);
          ga.bounds.lower[index] = range.at(0).get<double>();
          ga.bounds.upper[index] = range.at(1).get<double>();
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  }
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError({path.string() + ": " + e.what()});
  }
  apply_json(j, base);
  return base;
}

void apply_bound_override(const std::string& spec, ParamBounds& bounds) {
  const auto eq = spec.find('=');
  const auto colon = spec.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || colon == std::string::npos)
    throw ValidationError({"bound override must look like name=lo:hi, got '" + spec + "'"});
  const int index = param_index(spec.substr(0, eq));
  try {
    std::size_t used = 0;
    const std::string lo_text = spec.substr(eq + 1, colon - eq - 1);
    const std::string hi_text = spec.substr(colon + 1);
    const double lo = std::stod(lo_text, &used);
    if (used != lo_text.size()) throw std::invalid_argument(lo_text);
    const double hi = std::stod(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument(hi_text);
    bounds.lower[index] = lo;
    bounds.upper[index] = hi;
  } catch (const std::logic_error&) {
    throw ValidationError({"bound override has non-numeric limits: '" + spec + "'"});
  }
}

void write_params(const fs::path& path, const PivotParams& params, int precision) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write output file: " + path.string());
  const auto v = params.to_vector();
  for (int j = 0; j < 5; ++j) out << PivotParams::names[j] << " = " << format_number(v[j], precision) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

PivotParams read_params(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open params file: " + path.string());
  std::map<std::string, double> values;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    const auto where = path.string() + ": line " + std::to_string(line_number);
    if (eq == std::string::npos) throw ValidationError({where + ": expected 'name = value'"});
    std::istringstream key_in(line.substr(0, eq));
    std::istringstream value_in(line.substr(eq + 1));
    std::string key;
    double value = 0.0;
    std::string rest;
    if (!(key_in >> key) || !(value_in >> value) || (value_in >> rest))
      throw ValidationError({where + ": malformed entry"});
    values[key] = value;
  }
  Eigen::Matrix<double, 5, 1> v;
  for (int j = 0; j < 5; ++j) {
    const auto it = values.find(PivotParams::names[j]);
    if (it == values.end())
      throw ValidationError({path.string() + ": missing parameter '" + PivotParams::names[j] + "'"});
    v[j] = it->second;
  }
  return PivotParams::from_vector(v);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StageReport run_resample(const PipelineConfig& c) {
  return in_stage("resample", [&] {
    const auto raw = load_record(c.input, c.format);
    ensure_outdir(c.outdir);
    const auto reduced = regular_reduce(raw, c.step);
    const auto resampled = irregular_resample(reduced, c.scale);
    StageReport report;
    write_record(c.outdir / "reduced.csv", reduced, table_format(c));
    write_record(c.outdir / "resampled.csv", resampled, table_format(c));
    report.outputs = {c.outdir / "reduced.csv", c.outdir / "resampled.csv"};
    return report;
  });
}

StageReport run_backbone(const PipelineConfig& c) {
  return in_stage("backbone", [&] {
    const auto resampled = load_stage_file(resampled_path(c));
    ensure_outdir(c.outdir);
    StageReport report;
    const auto envelope = extract_envelope(resampled);
    if (envelope.degenerate) report.warnings.push_back("load never changes sign: envelope is a single extremum");
    write_record(c.outdir / "envelope.csv", to_pair(envelope), table_format(c));
    report.outputs.push_back(c.outdir / "envelope.csv");
    const auto backbone = idealize(envelope);
    for (auto& w : backbone_warnings(backbone)) report.warnings.push_back(std::move(w));
    write_record(c.outdir / "idealized.csv", to_pair(backbone), table_format(c));
    report.outputs.push_back(c.outdir / "idealized.csv");
    return report;
  });
}

StageReport run_simulate(const PipelineConfig& c) {
  return in_stage("simulate", [&] {
    const auto resampled = load_stage_file(resampled_path(c));
    const auto backbone = backbone_from_pair(load_stage_file(backbone_path(c)));
    const auto params = read_params(params_path(c));
    validate(params, std::max(kDefaultEtaMax, c.ga.bounds.upper[4]));
    ensure_outdir(c.outdir);
    const auto sim = simulate_detailed(BackboneGeometry(backbone), params, resampled.displacement);
    StageReport report;
    if (sim.beyond_ultimate) report.warnings.push_back("displacement history exceeds the ultimate backbone points");
    write_response(c, resampled, sim.load);
    report.outputs.push_back(c.outdir / "response.csv");
    return report;
  });
}

StageReport run_fit(const PipelineConfig& c, const RunControl& control) {
  return in_stage("fit", [&] {
    const auto resampled = load_stage_file(resampled_path(c));
    const auto backbone = backbone_from_pair(load_stage_file(backbone_path(c)));
    ensure_outdir(c.outdir);
    const auto result = fit(resampled, backbone, c.ga, control.should_stop, control.on_generation);
    write_convergence(c, result.history);
    StageReport report;
    report.outputs.push_back(c.outdir / "convergence.csv");
    write_params(c.outdir / "best_params.txt", result.best.params, c.precision);
    report.outputs.push_back(c.outdir / "best_params.txt");
    if (result.cancelled) throw Interrupted("fit: interrupted; partial convergence history written");

    // The response is simulated from the parameters as written, so `simulate` reproduces it.
    PipelineConfig sim = c;
    sim.resampled_file = resampled_path(c);
    sim.backbone_file = backbone_path(c);
    sim.params_file = c.outdir / "best_params.txt";
    const auto simulated = run_simulate(sim);
    report.outputs.insert(report.outputs.end(), simulated.outputs.begin(), simulated.outputs.end());
    report.warnings.insert(report.warnings.end(), simulated.warnings.begin(), simulated.warnings.end());
    return report;
  });
}

StageReport run_pipeline(const PipelineConfig& c, const RunControl& control) {
  PipelineConfig staged = c;
  staged.resampled_file.clear();
  staged.backbone_file.clear();
  staged.params_file.clear();
  StageReport report;
  const auto merge = [&](StageReport r) {
    report.outputs.insert(report.outputs.end(), r.outputs.begin(), r.outputs.end());
    report.warnings.insert(report.warnings.end(), r.warnings.begin(), r.warnings.end());
  };
  merge(run_resample(staged));
  merge(run_backbone(staged));
  merge(run_fit(staged, control));
  return report;
}

void write_manifest(const PipelineConfig& c, const std::string& command, const StageReport& report) {
  const json config = to_json(c);
  json inputs = json::object();
  const auto describe = [&](const char* key, const fs::path& p) {
    std::error_code ec;
    const auto size = fs::file_size(p, ec);
    inputs[key] = {{"path", p.generic_string()}, {"bytes", ec ? json(nullptr) : json(size)}};
  };
  if (command == "resample" || command == "pipeline") describe("record", c.input);
  if (command == "backbone" || command == "simulate" || command == "fit") describe("resampled", resampled_path(c));
  if (command == "simulate" || command == "fit") describe("backbone", backbone_path(c));
  if (command == "simulate") describe("params", params_path(c));

  json outputs = json::array();
  for (const auto& p : report.outputs) outputs.push_back(p.filename().generic_string());
  const json manifest = {
      {"command", command},
      {"inputs", inputs},
      {"config", config},
      {"config_hash", fnv1a_hex(config.dump())},
      {"outputs", outputs},
      {"warnings", report.warnings},
      {"versions",
       {{"pivotfit", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__}}},
  };
  const fs::path path = c.outdir / ("manifest-" + command + ".json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write output file: " + path.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace pivotfit
