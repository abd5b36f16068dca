#pragma once

#include "pivotfit/pivot.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pivotfit {

/// Sum of squared load differences. Lengths must match. Accumulated in index order so the
/// result is reproducible bit for bit.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar deviation_score(const Eigen::MatrixBase<DerivedA>& load_resp,
                                          const Eigen::MatrixBase<DerivedB>& load_exp) {
  if (load_resp.size() != load_exp.size())
    throw ValidationError({"deviation score needs equal lengths, got " + std::to_string(load_resp.size()) + " and " +
                           std::to_string(load_exp.size())});
  typename DerivedA::Scalar sum(0);
  for (Eigen::Index i = 0; i < load_resp.size(); ++i) {
    const auto diff = load_resp(i) - load_exp(i);
    sum += diff * diff;
  }
  return sum;
}

struct ParamBounds {
  Eigen::Matrix<double, 5, 1> lower{1.0, 1.0, 0.0, 0.0, 0.0};
  Eigen::Matrix<double, 5, 1> upper{100.0, 100.0, 1.0, 1.0, kDefaultEtaMax};

  /// Bounds with every parameter except `index` pinned to `truth`.
  static ParamBounds pinned_except(const PivotParams& truth, int index, const ParamBounds& free);
  static ParamBounds pinned_except(const PivotParams& truth, int index);
};

struct GAConfig {
  int population_size = 50;
  int max_generations = 300;
  int tournament_size = 3;
  double crossover_probability = 0.9;
  double blend_alpha = 0.5;
  double mutation_probability = 0.1;
  double mutation_scale = 0.1;  // fraction of each parameter's range
  int elite_count = 2;
  ParamBounds bounds;
  std::uint64_t rng_seed = 1;
  int stall_generations = 50;
  int threads = 1;  // 0: one per hardware thread
};

std::vector<std::string> check(const GAConfig& config);

struct Individual {
  PivotParams params;
  double score = 0.0;
};

struct GenerationRecord {
  int generation = 0;  // 1-based; generation 1 is the initial population
  double best_score = 0.0;
  double mean_score = 0.0;
  PivotParams best;
};

struct ConvergenceHistory {
  std::vector<GenerationRecord> generations;
};

struct FitResult {
  Individual best;
  ConvergenceHistory history;
  bool stalled = false;
  bool cancelled = false;
};

/// Deviation score of the Pivot response on the resampled displacement grid against its loads.
double evaluate(const PivotParams& params, const BackboneGeometry& geometry, const SignalPair& resampled);
double evaluate(const PivotParams& params, const IdealizedBackbone& backbone, const SignalPair& resampled);

/// Generational real-coded GA: uniform initialisation, tournament selection, blend crossover,
/// per-gene Gaussian mutation clamped to bounds, elitism, stall-based early stop.
/// All random draws happen on the calling thread before each generation is evaluated, so the
/// result depends only on `rng_seed`, not on `threads`.
FitResult fit(const SignalPair& resampled, const IdealizedBackbone& backbone, const GAConfig& config,
              const std::function<bool()>& should_stop = {},
              const std::function<void(const GenerationRecord&)>& on_generation = {});

}  // namespace pivotfit
