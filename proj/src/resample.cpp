#include "pivotfit/resample.hpp"

#include "pivotfit/ingest.hpp"

#include <algorithm>
#include <string>

namespace pivotfit {

namespace {

struct Knots {
  std::vector<long> x;  // strictly ascending grid coordinates
  std::vector<double> y;
};

double interpolate(const Knots& knots, long query) {
  const auto it = std::lower_bound(knots.x.begin(), knots.x.end(), query);
  const auto k = static_cast<std::size_t>(it - knots.x.begin());
  if (it != knots.x.end() && *it == query) return knots.y[k];
  // Queries always lie inside the knot span: both segment ends are knots.
  const double t = static_cast<double>(query - knots.x[k - 1]) / static_cast<double>(knots.x[k] - knots.x[k - 1]);
  return std::lerp(knots.y[k - 1], knots.y[k], t);
}

void check_changes(const DirectionChangeIndices& changes, Eigen::Index n) {
  if (changes.indices.empty()) throw ValidationError({"direction change list is empty"});
  for (std::size_t i = 0; i < changes.indices.size(); ++i) {
    const auto idx = changes.indices[i];
    if (idx < 0 || idx >= n)
      throw ValidationError({"direction change index " + std::to_string(idx) + " out of range"});
    if (i > 0 && idx <= changes.indices[i - 1])
      throw ValidationError({"direction change indices must be strictly increasing (entry " + std::to_string(i) + ")"});
  }
  if (changes.indices.back() != n - 1)
    throw ValidationError({"last direction change index must be the final sample"});
}

}  // namespace

SignalPair irregular_resample(const SignalPair& pair, ResamplingScale scale, const DirectionChangeIndices& changes) {
  validate(pair);
  if (scale.scale <= 10)
    throw ValidationError({"resampling scale must be greater than 10, got " + std::to_string(scale.scale)});
  const Eigen::Index n = pair.size();
  check_changes(changes, n);

  std::vector<long> grid(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = grid_floor(pair.displacement[i], scale.scale);

  std::vector<long> out_grid{grid.front()};
  std::vector<double> out_load{pair.load[0]};

  std::size_t first = 0;
  long previous = grid.front();
  for (std::size_t segment = 0; segment < changes.indices.size(); ++segment) {
    const auto end = static_cast<std::size_t>(changes.indices[segment]);
    if (end <= first) continue;

    const bool rising = std::is_sorted(grid.begin() + first, grid.begin() + end + 1);
    const bool falling = std::is_sorted(grid.begin() + first, grid.begin() + end + 1, std::greater<>{});
    if (!rising && !falling)
      throw ValidationError({"segment " + std::to_string(segment) + " (samples " + std::to_string(first) + ".." +
                             std::to_string(end) + ") is not monotonic in displacement"});

    const long last = grid[end];
    if (last != previous) {
      // Keep the first sample at each grid coordinate, ordered by ascending coordinate.
      Knots knots;
      for (std::size_t i = first; i <= end; ++i) {
        if (!knots.x.empty() && grid[i] == knots.x.back()) continue;
        knots.x.push_back(grid[i]);
        knots.y.push_back(pair.load[static_cast<Eigen::Index>(i)]);
      }
      if (falling && !rising) {
        std::reverse(knots.x.begin(), knots.x.end());
        std::reverse(knots.y.begin(), knots.y.end());
      }
      const long stride = last > previous ? 1 : -1;
      for (long q = previous + stride; q != last + stride; q += stride) {
        out_grid.push_back(q);
        out_load.push_back(interpolate(knots, q));
      }
    }
    first = end;
    previous = last;
  }

  if (out_grid.size() < 2)
    throw ValidationError({"resampled record spans a single grid point; increase the resampling scale"});

  SignalPair out;
  out.displacement.resize(static_cast<Eigen::Index>(out_grid.size()));
  out.load.resize(static_cast<Eigen::Index>(out_load.size()));
  const double s = static_cast<double>(scale.scale);
  for (std::size_t i = 0; i < out_grid.size(); ++i) {
    out.displacement[static_cast<Eigen::Index>(i)] = static_cast<double>(out_grid[i]) / s;
    out.load[static_cast<Eigen::Index>(i)] = out_load[i];
  }
  return out;
}

SignalPair irregular_resample(const SignalPair& pair, ResamplingScale scale) {
  validate(pair);
  return irregular_resample(pair, scale, detect_reversals(pair.displacement));
}

}  // namespace pivotfit
