#include "pivotfit/optimize.hpp"

#include "pivotfit/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace pivotfit {

namespace {

using Genes = Eigen::Matrix<double, 5, 1>;

constexpr double kFailedScore = std::numeric_limits<double>::infinity();

Genes clamp(const Genes& g, const ParamBounds& b) { return g.cwiseMax(b.lower).cwiseMin(b.upper); }

void evaluate_all(std::vector<Individual>& population, const std::vector<std::size_t>& pending,
                  const BackboneGeometry& geometry, const SignalPair& resampled, int threads) {
  const auto work = [&](std::size_t k) {
    auto& ind = population[pending[k]];
    try {
      ind.score = evaluate(ind.params, geometry, resampled);
      if (!std::isfinite(ind.score)) ind.score = kFailedScore;
    } catch (const Error&) {
      ind.score = kFailedScore;
    }
  };

  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, pending.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < pending.size(); ++k) work(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < pending.size(); k = next++) work(k);
    });
  }
}

GenerationRecord summarize(int generation, const std::vector<Individual>& population) {
  GenerationRecord rec;
  rec.generation = generation;
  std::size_t best = 0;
  double sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (population[i].score < population[best].score) best = i;
    if (std::isfinite(population[i].score)) {
      sum += population[i].score;
      ++finite;
    }
  }
  if (finite == 0) throw OptimizationError("every individual of generation " + std::to_string(generation) + " failed to evaluate");
  rec.best_score = population[best].score;
  rec.mean_score = sum / static_cast<double>(finite);
  rec.best = population[best].params;
  return rec;
}

}  // namespace

ParamBounds ParamBounds::pinned_except(const PivotParams& truth, int index, const ParamBounds& free) {
  ParamBounds b;
  b.lower = truth.to_vector();
  b.upper = truth.to_vector();
  b.lower[index] = free.lower[index];
  b.upper[index] = free.upper[index];
  return b;
}

ParamBounds ParamBounds::pinned_except(const PivotParams& truth, int index) {
  return pinned_except(truth, index, ParamBounds{});
}

std::vector<std::string> check(const GAConfig& c) {
  std::vector<std::string> issues;
  if (c.population_size < 2) issues.push_back("population_size must be at least 2");
  if (c.max_generations < 1) issues.push_back("max_generations must be positive");
  if (c.tournament_size < 1) issues.push_back("tournament_size must be positive");
  if (!(c.crossover_probability >= 0 && c.crossover_probability <= 1)) issues.push_back("crossover_probability must lie in [0, 1]");
  if (!(c.mutation_probability >= 0 && c.mutation_probability <= 1)) issues.push_back("mutation_probability must lie in [0, 1]");
  if (!(c.mutation_scale > 0)) issues.push_back("mutation_scale must be positive");
  if (!(c.blend_alpha >= 0)) issues.push_back("blend_alpha must be non-negative");
  if (c.elite_count < 0 || c.elite_count >= c.population_size) issues.push_back("elite_count must lie in [0, population_size)");
  if (c.stall_generations < 1) issues.push_back("stall_generations must be positive");
  if (c.threads < 0) issues.push_back("threads must be non-negative");
  if (!c.bounds.lower.allFinite() || !c.bounds.upper.allFinite() || (c.bounds.lower.array() > c.bounds.upper.array()).any()) {
    issues.push_back("parameter bounds must be finite with lower <= upper");
  } else {
    // Every point of the box must be a valid parameter set.
    const auto lo = PivotParams::from_vector(c.bounds.lower);
    const auto hi = PivotParams::from_vector(c.bounds.upper);
    for (const auto& issue : check(lo, c.bounds.upper[4])) issues.push_back("lower bound: " + issue);
    for (const auto& issue : check(hi, c.bounds.upper[4])) issues.push_back("upper bound: " + issue);
  }
  return issues;
}

double evaluate(const PivotParams& params, const BackboneGeometry& geometry, const SignalPair& resampled) {
  return deviation_score(simulate(geometry, params, resampled.displacement), resampled.load);
}

double evaluate(const PivotParams& params, const IdealizedBackbone& backbone, const SignalPair& resampled) {
  return evaluate(params, BackboneGeometry(backbone), resampled);
}

FitResult fit(const SignalPair& resampled, const IdealizedBackbone& backbone, const GAConfig& config,
              const std::function<bool()>& should_stop,
              const std::function<void(const GenerationRecord&)>& on_generation) {
  validate(resampled);
  if (auto issues = check(config); !issues.empty()) throw ValidationError(std::move(issues));
  const BackboneGeometry geometry(backbone);
  const auto& bounds = config.bounds;
  const Genes range = bounds.upper - bounds.lower;
  const auto n = static_cast<std::size_t>(config.population_size);

  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::vector<Individual> population(n);
  for (auto& ind : population) {
    Genes g;
    for (int j = 0; j < 5; ++j) g[j] = bounds.lower[j] + unit(rng) * range[j];
    ind.params = PivotParams::from_vector(clamp(g, bounds));
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  evaluate_all(population, all, geometry, resampled, config.threads);

  FitResult result;
  auto record = summarize(1, population);
  result.history.generations.push_back(record);
  if (on_generation) on_generation(record);
  result.best = {record.best, record.best_score};
  int stall = 0;

  const auto tournament = [&]() -> const Individual& {
    std::size_t winner = pick(rng);
    for (int t = 1; t < config.tournament_size; ++t) {
      const std::size_t challenger = pick(rng);
      if (population[challenger].score < population[winner].score) winner = challenger;
    }
    return population[winner];
  };

  for (int generation = 2; generation <= config.max_generations; ++generation) {
    if (should_stop && should_stop()) {
      result.cancelled = true;
      break;
    }
    std::stable_sort(population.begin(), population.end(),
                     [](const Individual& a, const Individual& b) { return a.score < b.score; });

    std::vector<Individual> next(population.begin(), population.begin() + config.elite_count);
    while (next.size() < n) {
      Genes a = tournament().params.to_vector();
      Genes b = tournament().params.to_vector();
      if (unit(rng) < config.crossover_probability) {
        Genes c1;
        Genes c2;
        for (int j = 0; j < 5; ++j) {
          const double lo = std::min(a[j], b[j]);
          const double hi = std::max(a[j], b[j]);
          const double spread = config.blend_alpha * (hi - lo);
          c1[j] = lo - spread + unit(rng) * (hi - lo + 2 * spread);
          c2[j] = lo - spread + unit(rng) * (hi - lo + 2 * spread);
        }
        a = c1;
        b = c2;
      }
      for (Genes* child : {&a, &b}) {
        for (int j = 0; j < 5; ++j) {
          if (unit(rng) < config.mutation_probability) (*child)[j] += gauss(rng) * config.mutation_scale * range[j];
        }
        if (next.size() < n) next.push_back({PivotParams::from_vector(clamp(*child, bounds)), 0.0});
      }
    }
    population = std::move(next);

    std::vector<std::size_t> pending(n - static_cast<std::size_t>(config.elite_count));
    std::iota(pending.begin(), pending.end(), static_cast<std::size_t>(config.elite_count));
    evaluate_all(population, pending, geometry, resampled, config.threads);

    record = summarize(generation, population);
    result.history.generations.push_back(record);
    if (on_generation) on_generation(record);
    if (record.best_score < result.best.score) {
      result.best = {record.best, record.best_score};
      stall = 0;
    } else if (++stall >= config.stall_generations) {
      result.stalled = true;
      break;
    }
  }
  return result;
}

}  // namespace pivotfit
