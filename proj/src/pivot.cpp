#include "pivotfit/pivot.hpp"

#include "pivotfit/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pivotfit {

namespace {

constexpr int index_of(int side) { return side > 0 ? 0 : 1; }

bool ahead(double from, double to, int direction) { return direction * (to - from) > 0; }

}  // namespace

std::vector<std::string> check(const PivotParams& p, double eta_max) {
  std::vector<std::string> issues;
  const auto v = p.to_vector();
  if (!v.allFinite()) issues.push_back("Pivot parameters must be finite");
  if (!(p.alpha1 >= 1.0)) issues.push_back("alpha1 must be >= 1");
  if (!(p.alpha2 >= 1.0)) issues.push_back("alpha2 must be >= 1");
  if (!(p.beta1 >= 0.0 && p.beta1 <= 1.0)) issues.push_back("beta1 must lie in [0, 1]");
  if (!(p.beta2 >= 0.0 && p.beta2 <= 1.0)) issues.push_back("beta2 must lie in [0, 1]");
  if (!(p.eta >= 0.0 && p.eta <= eta_max)) issues.push_back("eta must lie in [0, " + std::to_string(eta_max) + "]");
  return issues;
}

const PivotParams& validate(const PivotParams& params, double eta_max) {
  if (auto issues = check(params, eta_max); !issues.empty()) throw ValidationError(std::move(issues));
  return params;
}

BackboneGeometry::BackboneGeometry(const IdealizedBackbone& backbone) : backbone_(backbone) {
  auto issues = check(backbone_);
  if (backbone_.displacement[4] == 0.0 || backbone_.displacement[2] == 0.0)
    issues.push_back("yield point at zero displacement: elastic stiffness undefined");
  if (!issues.empty()) throw ValidationError(std::move(issues));
  k_pos_ = backbone_.load[4] / backbone_.displacement[4];
  k_neg_ = backbone_.load[2] / backbone_.displacement[2];
  if (!(k_pos_ > 0) || !(k_neg_ > 0) || !std::isfinite(k_pos_) || !std::isfinite(k_neg_))
    throw ValidationError({"elastic stiffness must be positive and finite on both sides"});
}

double BackboneGeometry::envelope(double d) const {
  const auto& x = backbone_.displacement;
  const auto& y = backbone_.load;
  if (d <= x[0]) return y[0];
  if (d >= x[6]) return y[6];
  const auto* hi = std::upper_bound(x.data(), x.data() + 7, d);
  const auto k = static_cast<Eigen::Index>(hi - x.data()) - 1;
  if (x[k] == d) return y[k];
  const double t = (d - x[k]) / (x[k + 1] - x[k]);
  return std::lerp(y[k], y[k + 1], t);
}

double BackboneGeometry::envelope_upper(double d) const {
  const double from = std::max(d, 0.0);
  double best = envelope(from);
  for (int k = 0; k < 7; ++k) {
    if (backbone_.displacement[k] >= from) best = std::max(best, backbone_.load[k]);
  }
  return std::max(best, backbone_.load[6]);
}

double BackboneGeometry::envelope_lower(double d) const {
  const double from = std::min(d, 0.0);
  double best = envelope(from);
  for (int k = 0; k < 7; ++k) {
    if (backbone_.displacement[k] <= from) best = std::min(best, backbone_.load[k]);
  }
  return std::min(best, backbone_.load[0]);
}

PivotModel::PivotModel(BackboneGeometry geometry, PivotParams params)
    : geometry_(std::move(geometry)), params_(params) {}

double PivotModel::current_elastic_slope(int side) const {
  const double k = side > 0 ? geometry_.k_pos() : geometry_.k_neg();
  const double dy = side > 0 ? geometry_.dy_pos() : geometry_.dy_neg();
  const Point& ext = state_.extreme[index_of(side)];
  if (!(side * ext.d > side * dy)) return k;
  const double ductility = (ext.d - dy) / dy;
  const double degraded = k / (1.0 + params_.eta / kDegradationScale * ductility);
  // Never softer than any chord from the extreme back to a backbone knot it passed (the origin
  // included): the unloading line then stays inside the loading path and residual displacement
  // stays on the side.
  double floor = ext.f / ext.d;
  const auto& b = geometry_.backbone();
  for (int i = 0; i < 7; ++i) {
    if (side * b.displacement[i] > 0 && side * b.displacement[i] < side * ext.d)
      floor = std::max(floor, (ext.f - b.load[i]) / (ext.d - b.displacement[i]));
  }
  return std::max(degraded, floor);
}

Point PivotModel::primary_pivot(int side) const {
  const double fy = side > 0 ? geometry_.fy_pos() : geometry_.fy_neg();
  const double alpha = side > 0 ? params_.alpha1 : params_.alpha2;
  const double k = current_elastic_slope(side);
  return {-alpha * fy / k, -alpha * fy};
}

Point PivotModel::reload_target(int side) const {
  const Point& ext = state_.extreme[index_of(side)];
  const double dy = side > 0 ? geometry_.dy_pos() : geometry_.dy_neg();
  if (side * ext.d > side * dy) return ext;
  return side > 0 ? Point{geometry_.dy_pos(), geometry_.fy_pos()} : Point{geometry_.dy_neg(), geometry_.fy_neg()};
}

Point PivotModel::pinching_pivot(int side) const {
  const Point target = reload_target(side);
  if (!(side * target.f > 0)) return target;
  const Point pivot = primary_pivot(side);
  const double beta = side > 0 ? params_.beta1 : params_.beta2;
  const double f = beta * target.f;
  const double t = (f - pivot.f) / (target.f - pivot.f);
  return {std::lerp(pivot.d, target.d, t), f};
}

Point PivotModel::envelope_intersection(Point from, double slope, int side) const {
  const auto gap = [&](double d) { return side * (from.f + slope * (d - from.d) - geometry_.envelope(d)); };
  double prev = from.d;
  double gprev = gap(prev);
  if (gprev >= 0) return {from.d, geometry_.envelope(from.d)};

  const auto& knots = geometry_.backbone().displacement;
  for (int i = 0; i < 7; ++i) {
    const double x = side > 0 ? knots[i] : knots[6 - i];
    if (!ahead(prev, x, side)) continue;
    const double g = gap(x);
    if (g >= 0) {
      const double root = prev + (x - prev) * (-gprev / (g - gprev));
      return {root, geometry_.envelope(root)};
    }
    prev = x;
    gprev = g;
  }
  // Past the last knot the envelope is flat at its terminal load.
  const double terminal = side > 0 ? geometry_.backbone().load[6] : geometry_.backbone().load[0];
  return {from.d + (terminal - from.f) / slope, terminal};
}

void PivotModel::start_reloading(int side, Point from) {
  auto& s = state_;
  s.branch = Branch::Reloading;
  s.side = side;
  s.direction = side;
  s.segment = 0;
  s.path_size = 0;
  s.path[s.path_size++] = from;

  const double k = side > 0 ? geometry_.k_pos() : geometry_.k_neg();
  const Point target = reload_target(side);
  Point last = from;
  if (ahead(from.d, target.d, side)) {
    const Point pinch = pinching_pivot(side);
    if (ahead(from.d, pinch.d, side) && ahead(from.f, pinch.f, side) && ahead(pinch.d, target.d, side))
      s.path[s.path_size++] = pinch;
    s.path[s.path_size++] = target;
    last = target;
  }
  const double scale = std::max(std::abs(geometry_.backbone().load.maxCoeff()), std::abs(geometry_.backbone().load.minCoeff()));
  if (side * (geometry_.envelope(last.d) - last.f) > 1e-12 * scale) {
    const Point joint = envelope_intersection(last, k, side);
    if (ahead(last.d, joint.d, side)) s.path[s.path_size++] = joint;
  }
  if (s.path_size == 1) s.branch = Branch::Envelope;
}

void PivotModel::start_branch(int direction) {
  auto& s = state_;
  const Point here = s.current;
  if (here.f * direction < 0) {
    const int side = here.f > 0 ? 1 : -1;
    const Point pivot = primary_pivot(side);
    double slope = (here.f - pivot.f) / (here.d - pivot.d);
    if (!(slope > 0) || !std::isfinite(slope)) slope = current_elastic_slope(side);
    s.branch = Branch::Unloading;
    s.side = side;
    s.direction = direction;
    s.slope = slope;
    s.path[0] = here;
    s.path_size = 1;
    s.segment = 0;
  } else {
    start_reloading(direction, here);
  }
  s.direction = direction;
}

void PivotModel::update_extremes() {
  const Point& p = state_.current;
  const int side = (p.d > 0) - (p.d < 0);
  if (side == 0) return;
  Point& ext = state_.extreme[index_of(side)];
  if (side * p.d > side * ext.d && side * p.f >= 0) ext = p;
}

double PivotModel::step(double d_next) {
  if (!std::isfinite(d_next)) throw ValidationError({"displacement must be finite"});
  auto& s = state_;
  if (d_next == s.current.d) return s.current.f;

  const int direction = d_next > s.current.d ? 1 : -1;
  if (s.branch == Branch::Virgin || direction != s.direction) start_branch(direction);

  // Each pass either lands on d_next or moves to a later branch; a handful always suffices.
  for (int guard = 0; guard < 16; ++guard) {
    if (s.branch == Branch::Envelope) {
      s.current = {d_next, geometry_.envelope(d_next)};
      break;
    }
    if (s.branch == Branch::Unloading) {
      const Point& a = s.path[0];
      const double f = a.f + s.slope * (d_next - a.d);
      if (s.side * f > 0) {
        s.current = {d_next, f};
        break;
      }
      // Zero-load crossing inside the step: continue on the reloading branch from there.
      s.current = {a.d - a.f / s.slope, 0.0};
      start_reloading(direction, s.current);
      continue;
    }
    // Reloading
    bool landed = false;
    while (s.segment + 1 < s.path_size) {
      const Point& a = s.path[s.segment];
      const Point& b = s.path[s.segment + 1];
      if (direction * (d_next - b.d) < 0) {
        const double t = (d_next - a.d) / (b.d - a.d);
        s.current = {d_next, std::lerp(a.f, b.f, t)};
        landed = true;
        break;
      }
      ++s.segment;
      if (d_next == b.d) {
        s.current = b;
        landed = true;
        break;
      }
    }
    if (s.segment + 1 >= s.path_size) s.branch = Branch::Envelope;
    if (landed) break;
  }

  if (d_next > geometry_.d_ultimate_pos() || d_next < geometry_.d_ultimate_neg()) s.beyond_ultimate = true;
  update_extremes();
  return s.current.f;
}

SimulationResult simulate_detailed(const BackboneGeometry& geometry, const PivotParams& params,
                                   const Eigen::Ref<const Eigen::VectorXd>& displacements) {
  // The eta ceiling is a search setting; here only the structural constraints apply.
  validate(params, std::numeric_limits<double>::infinity());
  PivotModel model(geometry, params);
  SimulationResult result;
  result.load.resize(displacements.size());
  for (Eigen::Index i = 0; i < displacements.size(); ++i) result.load[i] = model.step(displacements[i]);
  result.beyond_ultimate = model.state().beyond_ultimate;
  return result;
}

Eigen::VectorXd simulate(const BackboneGeometry& geometry, const PivotParams& params,
                         const Eigen::Ref<const Eigen::VectorXd>& displacements) {
  return simulate_detailed(geometry, params, displacements).load;
}

Eigen::VectorXd simulate(const IdealizedBackbone& backbone, const PivotParams& params,
                         const Eigen::Ref<const Eigen::VectorXd>& displacements) {
  return simulate(BackboneGeometry(backbone), params, displacements);
}

}  // namespace pivotfit
