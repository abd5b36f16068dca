#pragma once

#include "pivotfit/signal.hpp"

#include <cmath>
#include <vector>

namespace pivotfit {

/// Index stride for regular reduction. Must be at least 1.
struct ReductionStep {
  Eigen::Index m = 1;
};

/// Grid density for irregular resampling: the output displacement grid spacing is 1/scale.
struct ResamplingScale {
  long scale = 100;
};

/// Segment end positions (0-based, strictly increasing) of the displacement trace.
/// The last entry is always the final sample.
struct DirectionChangeIndices {
  std::vector<Eigen::Index> indices;
};

/// Keeps samples 0, m, 2m, ... of both arrays. Output length is ceil(n / m).
template <typename Scalar>
BasicSignalPair<Scalar> regular_reduce(const BasicSignalPair<Scalar>& pair, ReductionStep step) {
  if (step.m < 1) throw ValidationError({"reduction step must be >= 1, got " + std::to_string(step.m)});
  const Eigen::Index n = pair.size();
  const Eigen::Index kept = (n + step.m - 1) / step.m;
  BasicSignalPair<Scalar> out;
  out.displacement = pair.displacement(Eigen::seqN(0, kept, step.m));
  out.load = pair.load(Eigen::seqN(0, kept, step.m));
  return out;
}

/// Positions where the sign of the first difference flips (local extrema), plus the final
/// sample. Zero differences carry the previous direction, so plateaus never count as reversals.
template <typename Derived>
DirectionChangeIndices detect_reversals(const Eigen::DenseBase<Derived>& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw ValidationError({"detect_reversals needs at least 2 samples"});
  DirectionChangeIndices out;
  int direction = 0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const auto diff = values(i + 1) - values(i);
    const int sign = (diff > 0) - (diff < 0);
    if (sign == 0) continue;
    if (direction != 0 && sign != direction) out.indices.push_back(i);
    direction = sign;
  }
  out.indices.push_back(n - 1);
  return out;
}

/// Integer grid coordinate of a displacement, floored toward negative infinity. Values within
/// a few ulps of an integer snap to it so that on-grid data survives the scale round trip.
inline long grid_floor(double value, long scale) {
  const double scaled = value * static_cast<double>(scale);
  const double nearest = std::round(scaled);
  if (std::abs(scaled - nearest) <= 1e-9 * std::max(1.0, std::abs(scaled))) return static_cast<long>(nearest);
  return static_cast<long>(std::floor(scaled));
}

/// Re-grids the record onto uniform displacement increments of 1/scale. Each monotonic segment
/// (bounded by `changes`) is linearly interpolated at the integer grid points strictly past the
/// previous segment's end up to and including its own end. The first grid point of the record
/// is emitted once at the start.
SignalPair irregular_resample(const SignalPair& pair, ResamplingScale scale, const DirectionChangeIndices& changes);

/// Convenience: detect_reversals on the displacement trace followed by irregular_resample.
SignalPair irregular_resample(const SignalPair& pair, ResamplingScale scale);

}  // namespace pivotfit
