#pragma once

#include "pivotfit/signal.hpp"

#include <vector>

namespace pivotfit {

/// Backbone points, one per loading half-cycle, strictly ascending in displacement.
struct EnvelopeCurve {
  Eigen::VectorXd displacement;
  Eigen::VectorXd load;
  std::vector<Eigen::Index> source_index;  // sample each point was taken from
  bool degenerate = false;                 // record never changes load sign

  Eigen::Index size() const { return displacement.size(); }
};

/// Seven-point piecewise-linear backbone. Row k (0-based) holds point k+1:
/// 0 negative ultimate, 1 negative peak, 2 negative yield, 3 origin, 4 positive yield,
/// 5 positive peak, 6 positive ultimate.
struct IdealizedBackbone {
  Eigen::Matrix<double, 7, 1> displacement = Eigen::Matrix<double, 7, 1>::Zero();
  Eigen::Matrix<double, 7, 1> load = Eigen::Matrix<double, 7, 1>::Zero();
  bool positive_yield_at_peak = false;
  bool negative_yield_at_peak = false;
};

/// Share of the side's extreme load a point must exceed to be taken as the yield point.
inline constexpr double kYieldLoadRatio = 0.65;

/// Splits the load trace into half-cycles at sign changes and keeps the signed extremum of
/// each. A zero load sample stays with the half-cycle before it; leading zeros join the first.
EnvelopeCurve extract_envelope(const SignalPair& pair);

/// Throws ValidationError when either side has fewer than 3 envelope points or when the
/// extreme loads sit on the wrong side of the origin.
IdealizedBackbone idealize(const EnvelopeCurve& envelope);

/// Returns a list of violated IdealizedBackbone invariants (empty when valid).
std::vector<std::string> check(const IdealizedBackbone& backbone);

/// Reads an idealized backbone from a 7-row displacement/load table.
IdealizedBackbone backbone_from_pair(const SignalPair& pair);
SignalPair to_pair(const IdealizedBackbone& backbone);
SignalPair to_pair(const EnvelopeCurve& envelope);

}  // namespace pivotfit
