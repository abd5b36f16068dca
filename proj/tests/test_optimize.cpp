#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "pivotfit/optimize.hpp"

#include <atomic>

using namespace pivotfit;

namespace {

struct Record {
  IdealizedBackbone backbone = oracle::reference_backbone();
  PivotParams truth{19.82, 16.11, 0.73, 0.80, 147.4};
  SignalPair resampled;

  Record() {
    resampled.displacement = oracle::cyclic_protocol({10.0, 20.0, 30.0}, 1, 1.0);
    resampled.load = simulate(backbone, truth, resampled.displacement);
  }
};

GAConfig small_config() {
  GAConfig c;
  c.population_size = 16;
  c.max_generations = 25;
  return c;
}

}  // namespace

TEST_CASE("deviation score examples") {
  Eigen::Vector2d a(1, 2);
  CHECK(deviation_score(a, Eigen::Vector2d::Zero()) == 5.0);
  CHECK(deviation_score(a, a) == 0.0);
  Eigen::Vector3f x(1, -2, 3);
  Eigen::Vector3f y(0, 0, 1);
  CHECK(deviation_score(x, y) == 9.0f);
  CHECK_THROWS_AS(deviation_score(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)), ValidationError);
}

TEST_CASE("property: deviation score is the elementwise loop, symmetric and zero only on equal arrays") {
  oracle::Rng rng(51);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(1, 300));
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-100, 100);
      b[i] = rng.coin() ? a[i] : rng.uniform(-100, 100);
    }
    const auto p = make_signal(a, b);
    const double s = deviation_score(p.displacement, p.load);
    CHECK(s == oracle::squared_deviation(a, b));
    CHECK(s == deviation_score(p.load, p.displacement));
    CHECK(s >= 0.0);
    CHECK((s == 0.0) == (a == b));
  }
}

TEST_CASE("evaluate: generating parameters score zero on their own record") {
  const Record r;
  CHECK(evaluate(r.truth, r.backbone, r.resampled) <= 1e-9 * r.resampled.load.squaredNorm());
  SignalPair zero;
  zero.displacement = Eigen::VectorXd::Zero(10);
  zero.load = Eigen::VectorXd::Zero(10);
  CHECK(evaluate(PivotParams{50, 3, 0.1, 0.9, 800}, r.backbone, zero) == 0.0);
}

TEST_CASE("evaluate: moving any parameter away from the truth raises the score") {
  const Record r;
  const BackboneGeometry g(r.backbone);
  const ParamBounds bounds;
  for (int j = 0; j < 5; ++j) {
    CAPTURE(PivotParams::names[j]);
    const double range = bounds.upper[j] - bounds.lower[j];
    for (double offset : {-0.05, 0.05}) {
      auto v = r.truth.to_vector();
      v[j] = std::clamp(v[j] + offset * range, bounds.lower[j], bounds.upper[j]);
      CHECK(evaluate(PivotParams::from_vector(v), g, r.resampled) > evaluate(r.truth, g, r.resampled));
    }
  }
}

TEST_CASE("GA configuration is validated") {
  CHECK(check(GAConfig{}).empty());
  GAConfig c;
  c.population_size = 1;
  CHECK_FALSE(check(c).empty());
  c = GAConfig{};
  c.elite_count = c.population_size;
  CHECK_FALSE(check(c).empty());
  c = GAConfig{};
  c.bounds.lower[0] = 0.5;  // alpha below 1 is not a valid parameter
  CHECK_FALSE(check(c).empty());
  c = GAConfig{};
  c.bounds.upper[2] = -1;
  CHECK_FALSE(check(c).empty());
  c = GAConfig{};
  c.mutation_probability = 1.5;
  CHECK_FALSE(check(c).empty());
  const Record r;
  CHECK_THROWS_AS(fit(r.resampled, r.backbone, c), ValidationError);
}

TEST_CASE("pinned bounds leave exactly one free parameter") {
  const PivotParams truth{19.82, 16.11, 0.73, 0.80, 147.4};
  const auto b = ParamBounds::pinned_except(truth, 2);
  CHECK(b.lower[2] == 0.0);
  CHECK(b.upper[2] == 1.0);
  CHECK(b.lower[0] == truth.alpha1);
  CHECK(b.upper[4] == truth.eta);
}

TEST_CASE("GA history: bounded length, non-increasing best, bounds respected") {
  const Record r;
  auto c = small_config();
  c.bounds.lower << 5, 5, 0.2, 0.2, 50;
  c.bounds.upper << 40, 30, 0.9, 0.95, 400;
  int callbacks = 0;
  const auto result = fit(r.resampled, r.backbone, c, {}, [&](const GenerationRecord&) { ++callbacks; });
  const auto& g = result.history.generations;
  REQUIRE(!g.empty());
  CHECK(static_cast<int>(g.size()) <= c.max_generations);
  CHECK(callbacks == static_cast<int>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i].generation == static_cast<int>(i) + 1);
    const auto v = g[i].best.to_vector();
    CHECK((v.array() >= c.bounds.lower.array()).all());
    CHECK((v.array() <= c.bounds.upper.array()).all());
    CHECK(g[i].mean_score >= g[i].best_score);
    if (i > 0) CHECK(g[i].best_score <= g[i - 1].best_score);
  }
  CHECK(result.best.score == g.back().best_score);
  CHECK(result.best.score < g.front().best_score);
}

TEST_CASE("GA is reproducible from its seed regardless of thread count") {
  const Record r;
  auto c = small_config();
  const auto one = fit(r.resampled, r.backbone, c);
  c.threads = 3;
  const auto three = fit(r.resampled, r.backbone, c);
  REQUIRE(one.history.generations.size() == three.history.generations.size());
  for (std::size_t i = 0; i < one.history.generations.size(); ++i) {
    CHECK(one.history.generations[i].best_score == three.history.generations[i].best_score);
    CHECK(one.history.generations[i].mean_score == three.history.generations[i].mean_score);
    CHECK(one.history.generations[i].best == three.history.generations[i].best);
  }
  c.rng_seed = 2;
  const auto other = fit(r.resampled, r.backbone, c);
  CHECK_FALSE(other.history.generations.front().best == one.history.generations.front().best);
}

TEST_CASE("stall stops early") {
  const Record r;
  auto c = small_config();
  c.max_generations = 500;
  c.stall_generations = 3;
  c.bounds = ParamBounds::pinned_except(r.truth, 0, ParamBounds{});
  c.bounds.lower[0] = c.bounds.upper[0] = r.truth.alpha1;  // nothing left to improve
  const auto result = fit(r.resampled, r.backbone, c);
  CHECK(result.stalled);
  CHECK(result.history.generations.size() == 4);
}

TEST_CASE("cancellation stops between generations") {
  const Record r;
  auto c = small_config();
  std::atomic<int> calls{0};
  const auto result = fit(r.resampled, r.backbone, c, [&] { return ++calls > 2; });
  CHECK(result.cancelled);
  CHECK(result.history.generations.size() == 3);
}

TEST_CASE("a generation that cannot be evaluated is an optimization failure") {
  Record r;
  // Resampled loads with a non-finite value poison every score.
  r.resampled.load[3] = 1e308;
  r.resampled.load[4] = 1e308;
  CHECK_THROWS_AS(fit(r.resampled, r.backbone, small_config()), OptimizationError);
}

TEST_CASE("small GA recovers a one-parameter optimum") {
  const Record r;
  GAConfig c;
  c.population_size = 20;
  c.max_generations = 60;
  c.bounds = ParamBounds::pinned_except(r.truth, 3);
  const auto result = fit(r.resampled, r.backbone, c);
  CHECK(result.best.params.beta2 == doctest::Approx(r.truth.beta2).epsilon(0.02));
}
