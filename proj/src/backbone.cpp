#include "pivotfit/backbone.hpp"

#include "pivotfit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pivotfit {

namespace {

int sign_of(double v) { return (v > 0) - (v < 0); }

// First index of the largest (or smallest) coefficient.
template <typename Derived>
Eigen::Index first_extremum(const Eigen::DenseBase<Derived>& v, bool largest) {
  Eigen::Index at = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (largest ? v(i) > v(at) : v(i) < v(at)) at = i;
  }
  return at;
}

struct HalfCycle {
  Eigen::Index begin;
  Eigen::Index end;  // exclusive
};

std::vector<HalfCycle> split_half_cycles(const Eigen::VectorXd& load) {
  std::vector<HalfCycle> cycles;
  const Eigen::Index n = load.size();
  Eigen::Index begin = 0;
  int current = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int s = sign_of(load[i]);
    if (s == 0) continue;
    if (current != 0 && s != current) {
      cycles.push_back({begin, i});
      begin = i;
    }
    current = s;
  }
  cycles.push_back({begin, n});
  return cycles;
}

}  // namespace

EnvelopeCurve extract_envelope(const SignalPair& pair) {
  validate(pair);
  const auto cycles = split_half_cycles(pair.load);

  struct Peak {
    double displacement;
    double load;
    Eigen::Index index;
  };
  std::vector<Peak> peaks;
  peaks.reserve(cycles.size());
  for (const auto& c : cycles) {
    const auto subset = pair.load.segment(c.begin, c.end - c.begin);
    const double mean = subset.mean();
    const Eigen::Index idx = c.begin + first_extremum(subset, mean > 0);
    peaks.push_back({pair.displacement[idx], pair.load[idx], idx});
  }

  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.displacement < b.displacement; });

  // Peaks at the same displacement: the outer one (larger |load|) belongs to the backbone.
  std::vector<Peak> kept;
  for (const auto& p : peaks) {
    if (!kept.empty() && kept.back().displacement == p.displacement) {
      if (std::abs(p.load) > std::abs(kept.back().load)) kept.back() = p;
      continue;
    }
    kept.push_back(p);
  }

  EnvelopeCurve env;
  env.displacement.resize(static_cast<Eigen::Index>(kept.size()));
  env.load.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    env.displacement[static_cast<Eigen::Index>(i)] = kept[i].displacement;
    env.load[static_cast<Eigen::Index>(i)] = kept[i].load;
    env.source_index.push_back(kept[i].index);
  }
  env.degenerate = cycles.size() < 2;
  return env;
}

IdealizedBackbone idealize(const EnvelopeCurve& envelope) {
  const Eigen::Index n = envelope.size();
  if (n == 0 || envelope.load.size() != n) throw ValidationError({"envelope is empty or malformed"});

  std::vector<Eigen::Index> positive;
  std::vector<Eigen::Index> negative;  // ordered from the origin outwards
  for (Eigen::Index i = 0; i < n; ++i) {
    if (envelope.displacement[i] > 0) positive.push_back(i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (envelope.displacement[i] < 0) negative.push_back(i);
  }
  std::vector<std::string> issues;
  if (positive.size() < 3)
    issues.push_back("positive side has " + std::to_string(positive.size()) + " envelope points, at least 3 required");
  if (negative.size() < 3)
    issues.push_back("negative side has " + std::to_string(negative.size()) + " envelope points, at least 3 required");
  if (!issues.empty()) throw ValidationError(std::move(issues));

  IdealizedBackbone ib;
  // Ultimate points: extreme displacements (envelope is sorted).
  ib.displacement[6] = envelope.displacement[n - 1];
  ib.load[6] = envelope.load[n - 1];
  ib.displacement[0] = envelope.displacement[0];
  ib.load[0] = envelope.load[0];

  // Peak points: first occurrence of the extreme load.
  const Eigen::Index max_at = first_extremum(envelope.load, true);
  const Eigen::Index min_at = first_extremum(envelope.load, false);
  const double max_load = envelope.load[max_at];
  const double min_load = envelope.load[min_at];
  if (!(max_load > 0) || envelope.displacement[max_at] <= 0)
    issues.push_back("maximum envelope load must be positive and occur at positive displacement");
  if (!(min_load < 0) || envelope.displacement[min_at] >= 0)
    issues.push_back("minimum envelope load must be negative and occur at negative displacement");
  if (!issues.empty()) throw ValidationError(std::move(issues));
  ib.displacement[5] = envelope.displacement[max_at];
  ib.load[5] = max_load;
  ib.displacement[1] = envelope.displacement[min_at];
  ib.load[1] = min_load;

  // Yield points: first point outwards from the origin beyond 65% of the side's extreme load.
  const auto first_beyond = [&](const std::vector<Eigen::Index>& side, auto&& exceeds) {
    for (const auto i : side) {
      if (exceeds(envelope.load[i])) return i;
    }
    return Eigen::Index{-1};
  };
  const Eigen::Index pos_yield = first_beyond(positive, [&](double l) { return l > kYieldLoadRatio * max_load; });
  const Eigen::Index neg_yield = first_beyond(negative, [&](double l) { return l < kYieldLoadRatio * min_load; });
  // The peak itself always passes the test, so both scans hit.
  ib.displacement[4] = envelope.displacement[pos_yield];
  ib.load[4] = envelope.load[pos_yield];
  ib.displacement[2] = envelope.displacement[neg_yield];
  ib.load[2] = envelope.load[neg_yield];
  ib.positive_yield_at_peak = pos_yield == max_at;
  ib.negative_yield_at_peak = neg_yield == min_at;

  if (auto violations = check(ib); !violations.empty()) throw ValidationError(std::move(violations));
  return ib;
}

std::vector<std::string> check(const IdealizedBackbone& b) {
  std::vector<std::string> issues;
  if (!b.displacement.allFinite() || !b.load.allFinite()) issues.push_back("backbone has non-finite values");
  if (b.displacement[3] != 0.0 || b.load[3] != 0.0) issues.push_back("point 4 must be the origin");
  for (int k = 0; k < 6; ++k) {
    if (b.displacement[k] > b.displacement[k + 1])
      issues.push_back("backbone displacement decreases between points " + std::to_string(k + 1) + " and " +
                       std::to_string(k + 2));
  }
  if (b.displacement[2] >= 0) issues.push_back("negative yield point must have negative displacement");
  if (b.displacement[4] <= 0) issues.push_back("positive yield point must have positive displacement");
  if (!(b.load[4] > 0) || !(b.load[2] < 0)) issues.push_back("yield loads must carry the sign of their side");
  if (!(b.load[4] > kYieldLoadRatio * b.load[5])) issues.push_back("positive yield load not above 65% of peak");
  if (!(b.load[2] < kYieldLoadRatio * b.load[1])) issues.push_back("negative yield load not below 65% of peak");
  return issues;
}

IdealizedBackbone backbone_from_pair(const SignalPair& pair) {
  validate(pair);
  if (pair.size() != 7)
    throw ValidationError({"idealized backbone needs exactly 7 points, got " + std::to_string(pair.size())});
  IdealizedBackbone b;
  b.displacement = pair.displacement;
  b.load = pair.load;
  b.positive_yield_at_peak = b.displacement[4] == b.displacement[5];
  b.negative_yield_at_peak = b.displacement[2] == b.displacement[1];
  if (auto issues = check(b); !issues.empty()) throw ValidationError(std::move(issues));
  return b;
}

SignalPair to_pair(const IdealizedBackbone& backbone) {
  SignalPair p;
  p.displacement = backbone.displacement;
  p.load = backbone.load;
  return p;
}

SignalPair to_pair(const EnvelopeCurve& envelope) {
  SignalPair p;
  p.displacement = envelope.displacement;
  p.load = envelope.load;
  return p;
}

}  // namespace pivotfit
