// pivotfit: identify Pivot hysteresis parameters from cyclic load-deformation records.
//
//   pivotfit resample --input raw.csv --outdir out --step 2 --scale 100
//   pivotfit backbone --outdir out
//   pivotfit fit      --outdir out --seed 7 --bounds eta=0:500
//   pivotfit simulate --outdir out --params out/best_params.txt
//   pivotfit pipeline --config run.json
//
// Exit status: 0 success, 1 validation, 2 I/O, 3 optimization failure or interrupt.

#include "pivotfit/pipeline.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

struct Overrides {
  std::string config;
  std::string input;
  std::string outdir;
  std::optional<Eigen::Index> step;
  std::optional<long> scale;
  std::optional<std::uint64_t> seed;
  std::optional<int> population;
  std::optional<int> generations;
  std::optional<int> threads;
  std::optional<int> displacement_column;
  std::optional<int> load_column;
  std::string delimiter;
  std::vector<std::string> bounds;
  std::string resampled;
  std::string backbone;
  std::string params;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--input", o.input, "raw record (resample, pipeline)");
  cmd->add_option("--outdir", o.outdir, std::string("output directory (default: $") + pivotfit::kOutdirEnv + " or pivotfit-out)");
  cmd->add_option("--step", o.step, "regular reduction stride m");
  cmd->add_option("--scale", o.scale, "resampling scale (> 10); grid spacing is 1/scale");
  cmd->add_option("--seed", o.seed, "GA random seed");
  cmd->add_option("--population", o.population, "GA population size");
  cmd->add_option("--generations", o.generations, "GA generation limit");
  cmd->add_option("--threads", o.threads, "fitness evaluation threads (0 = all cores)");
  cmd->add_option("--disp-col", o.displacement_column, "0-based displacement column of the raw record");
  cmd->add_option("--load-col", o.load_column, "0-based load column of the raw record");
  cmd->add_option("--delimiter", o.delimiter, "raw record delimiter: ',' or 'tab'");
  cmd->add_option("--bounds", o.bounds, "parameter bounds, e.g. --bounds alpha1=1:50 (repeatable)");
  cmd->add_option("--resampled", o.resampled, "resampled record (default: <outdir>/resampled.csv)");
  cmd->add_option("--backbone", o.backbone, "idealized backbone (default: <outdir>/idealized.csv)");
  cmd->add_option("--params", o.params, "Pivot parameter file (default: <outdir>/best_params.txt)");
  cmd->add_flag("-q,--quiet", o.quiet, "no per-generation progress");
}

pivotfit::PipelineConfig build_config(const Overrides& o) {
  pivotfit::PipelineConfig c;
  if (const char* env = std::getenv(pivotfit::kOutdirEnv); env && *env) c.outdir = env;
  if (!o.config.empty()) c = pivotfit::load_config(o.config, c);
  if (!o.input.empty()) c.input = o.input;
  if (!o.outdir.empty()) c.outdir = o.outdir;
  if (o.step) c.step.m = *o.step;
  if (o.scale) c.scale.scale = *o.scale;
  if (o.seed) c.ga.rng_seed = *o.seed;
  if (o.population) c.ga.population_size = *o.population;
  if (o.generations) c.ga.max_generations = *o.generations;
  if (o.threads) c.ga.threads = *o.threads;
  if (o.displacement_column) c.format.displacement_column = static_cast<std::size_t>(*o.displacement_column);
  if (o.load_column) c.format.load_column = static_cast<std::size_t>(*o.load_column);
  if (!o.delimiter.empty()) c.format.delimiter = (o.delimiter == "tab" || o.delimiter == "\\t") ? '\t' : o.delimiter[0];
  for (const auto& b : o.bounds) pivotfit::apply_bound_override(b, c.ga.bounds);
  if (!o.resampled.empty()) c.resampled_file = o.resampled;
  if (!o.backbone.empty()) c.backbone_file = o.backbone;
  if (!o.params.empty()) c.params_file = o.params;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pivot hysteresis parameter identification from cyclic load-deformation records"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"resample", "regular reduction then uniform-grid resampling"},
      {"backbone", "envelope extraction and 7-point idealization"},
      {"simulate", "Pivot response on the resampled displacement grid"},
      {"fit", "genetic-algorithm parameter identification"},
      {"pipeline", "resample, backbone, fit and simulate in order"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  std::signal(SIGINT, on_sigint);
  pivotfit::RunControl control;
  control.should_stop = [] { return g_interrupted.load(); };
  if (!o.quiet) {
    control.on_generation = [](const pivotfit::GenerationRecord& g) {
      std::cerr << "generation " << g.generation << "  best " << pivotfit::format_number(g.best_score) << "  mean "
                << pivotfit::format_number(g.mean_score) << '\n';
    };
  }

  try {
    const auto config = build_config(o);
    if (auto issues = pivotfit::check(config.ga); !issues.empty()) throw pivotfit::ValidationError(std::move(issues));
    pivotfit::StageReport report;
    if (command == "resample") report = pivotfit::run_resample(config);
    else if (command == "backbone") report = pivotfit::run_backbone(config);
    else if (command == "simulate") report = pivotfit::run_simulate(config);
    else if (command == "fit") report = pivotfit::run_fit(config, control);
    else report = pivotfit::run_pipeline(config, control);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    pivotfit::write_manifest(config, command, report);
    for (const auto& p : report.outputs) std::cout << p.string() << '\n';
    return 0;
  } catch (const pivotfit::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const pivotfit::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const pivotfit::OptimizationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
