#pragma once

#include "pivotfit/backbone.hpp"

#include <array>
#include <string>
#include <vector>

namespace pivotfit {

/// The five Pivot model parameters.
struct PivotParams {
  double alpha1 = 10.0;  // primary pivot multiplier, unloading from positive force (>= 1)
  double alpha2 = 10.0;  // primary pivot multiplier, unloading from negative force (>= 1)
  double beta1 = 1.0;    // pinching pivot fraction, reloading toward positive force [0, 1]
  double beta2 = 1.0;    // pinching pivot fraction, reloading toward negative force [0, 1]
  double eta = 0.0;      // elastic-slope degradation (>= 0)

  static constexpr std::array<const char*, 5> names{"alpha1", "alpha2", "beta1", "beta2", "eta"};

  Eigen::Matrix<double, 5, 1> to_vector() const { return {alpha1, alpha2, beta1, beta2, eta}; }
  static PivotParams from_vector(const Eigen::Matrix<double, 5, 1>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

  bool operator==(const PivotParams&) const = default;
};

/// Upper admissible bound on eta. The conventional unit range is too narrow for fitted values
/// observed on reinforced-concrete frames, so the bound is a configuration value.
inline constexpr double kDefaultEtaMax = 1000.0;

/// eta / kDegradationScale is the fraction of secant-stiffness degradation applied per unit of
/// plastic ductility demand; eta == kDegradationScale unloads along K / (1 + mu).
inline constexpr double kDegradationScale = 1000.0;

std::vector<std::string> check(const PivotParams& params, double eta_max = kDefaultEtaMax);
const PivotParams& validate(const PivotParams& params, double eta_max = kDefaultEtaMax);

/// Elastic stiffness, yield force and envelope interpolant derived from an idealized backbone.
class BackboneGeometry {
 public:
  explicit BackboneGeometry(const IdealizedBackbone& backbone);

  double k_pos() const { return k_pos_; }
  double k_neg() const { return k_neg_; }
  double fy_pos() const { return backbone_.load[4]; }
  double fy_neg() const { return backbone_.load[2]; }
  double dy_pos() const { return backbone_.displacement[4]; }
  double dy_neg() const { return backbone_.displacement[2]; }
  double d_ultimate_pos() const { return backbone_.displacement[6]; }
  double d_ultimate_neg() const { return backbone_.displacement[0]; }
  const IdealizedBackbone& backbone() const { return backbone_; }

  /// Piecewise-linear interpolant through the 7 points, held at the terminal loads outside.
  double envelope(double d) const;

  /// Running hull of the envelope: the largest positive-side envelope load at or beyond
  /// max(d, 0), and the smallest negative-side load at or beyond min(d, 0).
  double envelope_upper(double d) const;
  double envelope_lower(double d) const;

 private:
  IdealizedBackbone backbone_;
  double k_pos_;
  double k_neg_;
};

enum class Branch { Virgin, Envelope, Unloading, Reloading };

struct Point {
  double d = 0.0;
  double f = 0.0;
};

/// Mutable engine state. Side quantities use index 0 for positive, 1 for negative.
struct HysteresisState {
  Point current;
  std::array<Point, 2> extreme{};  // farthest excursion per side with load of that side's sign
  Branch branch = Branch::Virgin;
  int direction = 0;               // +1 loading toward positive displacement, -1 toward negative
  int side = 0;                    // side the current branch belongs to (+1 / -1)
  // Unloading: straight line through `path[0]` with slope `slope`.
  // Reloading: polyline `path[0..path_size)`; after the last knot the envelope takes over.
  std::array<Point, 4> path{};
  int path_size = 0;
  int segment = 0;
  double slope = 0.0;
  bool beyond_ultimate = false;
};

/// Pivot hysteresis engine (single owner; run independent instances for concurrent use).
///
/// Rules, for a side s with elastic stiffness K, yield point (dy, Fy), primary-pivot multiplier
/// alpha and pinching fraction beta:
///  - beyond the prior extreme displacement the load follows the backbone;
///  - unloading from force of sign s heads for the primary pivot P at force -alpha*Fy on the
///    side's current elastic line, whose slope is K / (1 + eta/kDegradationScale * mu) with mu the
///    plastic ductility demand reached on that side, bounded below by the chords from the extreme
///    back to the origin and to every backbone knot it passed;
///  - reloading toward side s after the zero-load crossing passes through the pinching pivot PP,
///    the point of the line from the side's extreme point toward P at beta times the extreme load,
///    then reaches the extreme point and rejoins the backbone. Sides that never yielded target
///    their yield point, which keeps the response linear elastic there.
class PivotModel {
 public:
  PivotModel(BackboneGeometry geometry, PivotParams params);

  /// Advances to displacement `d_next` and returns the load there.
  double step(double d_next);

  const HysteresisState& state() const { return state_; }
  const BackboneGeometry& geometry() const { return geometry_; }
  const PivotParams& params() const { return params_; }

  /// Primary and pinching pivots the engine would use for side `side` in its current state.
  Point primary_pivot(int side) const;
  Point reload_target(int side) const;
  Point pinching_pivot(int side) const;
  double current_elastic_slope(int side) const;

 private:
  void start_branch(int direction);
  void start_reloading(int side, Point from);
  void update_extremes();
  Point envelope_intersection(Point from, double slope, int side) const;

  BackboneGeometry geometry_;
  PivotParams params_;
  HysteresisState state_;
};

struct SimulationResult {
  Eigen::VectorXd load;
  bool beyond_ultimate = false;
};

/// Folds PivotModel::step over the history from the virgin state at the origin.
SimulationResult simulate_detailed(const BackboneGeometry& geometry, const PivotParams& params,
                                   const Eigen::Ref<const Eigen::VectorXd>& displacements);

Eigen::VectorXd simulate(const BackboneGeometry& geometry, const PivotParams& params,
                         const Eigen::Ref<const Eigen::VectorXd>& displacements);

Eigen::VectorXd simulate(const IdealizedBackbone& backbone, const PivotParams& params,
                         const Eigen::Ref<const Eigen::VectorXd>& displacements);

}  // namespace pivotfit
