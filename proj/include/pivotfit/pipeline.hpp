#pragma once

#include "pivotfit/ingest.hpp"
#include "pivotfit/optimize.hpp"
#include "pivotfit/resample.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace pivotfit {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutdirEnv = "PIVOTFIT_OUTDIR";

struct PipelineConfig {
  std::filesystem::path input;
  RecordFormat format;
  std::filesystem::path outdir = "pivotfit-out";
  ReductionStep step{1};
  ResamplingScale scale{100};
  GAConfig ga;
  int precision = 9;
  std::string displacement_unit;
  std::string load_unit;

  // Stage inputs for the standalone subcommands; empty means "the file in outdir".
  std::filesystem::path resampled_file;
  std::filesystem::path backbone_file;
  std::filesystem::path params_file;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Overlays the keys present in `j` onto `config`.
void apply_json(const nlohmann::json& j, PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Parses `name=lo:hi` and updates the matching bound.
void apply_bound_override(const std::string& spec, ParamBounds& bounds);

void write_params(const std::filesystem::path& path, const PivotParams& params, int precision = 9);
PivotParams read_params(const std::filesystem::path& path);

/// Stable 64-bit FNV-1a digest, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

struct StageReport {
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;
};

struct RunControl {
  std::function<bool()> should_stop;
  std::function<void(const GenerationRecord&)> on_generation;
};

/// Every stage reads its inputs from files and writes its outputs under config.outdir, so a
/// stage run on its own gives the same bytes as the same stage inside run_pipeline().
/// Failures are rethrown with the stage name prefixed.
StageReport run_resample(const PipelineConfig& config);
StageReport run_backbone(const PipelineConfig& config);
StageReport run_simulate(const PipelineConfig& config);
StageReport run_fit(const PipelineConfig& config, const RunControl& control = {});
StageReport run_pipeline(const PipelineConfig& config, const RunControl& control = {});

/// manifest.json: command, inputs, effective config and its digest, versions, warnings.
void write_manifest(const PipelineConfig& config, const std::string& command, const StageReport& report);

/// Thrown by run_fit when should_stop() fired. Partial history has already been written.
class Interrupted : public OptimizationError {
 public:
  using OptimizationError::OptimizationError;
};

}  // namespace pivotfit
