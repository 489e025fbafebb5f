#include "reachrisk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace reachrisk {

PointMassState step_point_mass(const PointMassState& s, Accel2 a, double dt) {
  PointMassState n;
  n.v1 = s.v1 + a.a1 * dt;
  n.v2 = s.v2 + a.a2 * dt;
  n.y1 = s.y1 + (n.v1 + s.v1) * dt / 2.0;
  n.y2 = s.y2 + (n.v2 + s.v2) * dt / 2.0;
  return n;
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(angle + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  return w - std::numbers::pi;
}

std::array<double, 5> relative_deriv(const RelativeState& x, EgoInput ego, SurroundingInput sur,
                                     const VehicleGeometry& geom) {
  const double sb = std::sin(ego.slip);
  const double cb = std::cos(ego.slip);
  const double yaw_rate = x.v_ego / geom.l_r * sb;
  return {
      yaw_rate * x.y2 + x.v_s * std::cos(x.psi) - x.v_ego * cb,
      -yaw_rate * x.y1 + x.v_s * std::sin(x.psi) - x.v_ego * sb,
      sur.omega - yaw_rate,
      ego.accel,
      sur.accel,
  };
}

double slip_angle(double steer, const VehicleGeometry& geom) {
  return std::atan(geom.l_r / (geom.l_f + geom.l_r) * std::tan(steer));
}

BodyAccel accel_global_to_body(double xdd, double ydd, double psi, double x_dot, double y_dot) {
  if (!(x_dot > 0.0)) {
    throw std::invalid_argument("accel_global_to_body: longitudinal speed must be positive");
  }
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  BodyAccel out;
  out.ay = 0.5 * (ydd * c - xdd * s);
  out.ax = y_dot / x_dot * out.ay + (xdd * c + ydd * s);
  return out;
}

std::array<double, 2> accel_body_to_global(double ax, double ay, double psi, double x_dot,
                                           double y_dot) {
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  const double r = y_dot / x_dot;
  return {ax * c - 2.0 * ay * s - r * ay * c, ax * s + 2.0 * ay * c - r * ay * s};
}

namespace {

double min_abs(const Interval& i) {
  if (i.contains(0.0)) return 0.0;
  return std::min(std::abs(i.lo), std::abs(i.hi));
}

double max_abs(const Interval& i) { return std::max(std::abs(i.lo), std::abs(i.hi)); }

// Signed resultant acceleration: magnitude of (a_x, a_y) carrying the sign of a_x.
Interval resultant_accel(const Interval& ax, const Interval& ay) {
  const double ay_max = max_abs(ay);
  const double ay_min = min_abs(ay);
  Interval out;
  out.hi = ax.hi >= 0.0 ? std::hypot(ax.hi, ay_max) : -std::hypot(ax.hi, ay_min);
  out.lo = ax.lo < 0.0 ? -std::hypot(ax.lo, ay_max) : std::hypot(ax.lo, ay_min);
  return out;
}

}  // namespace

GameInputRanges derive_input_ranges(const PointMassRanges& pm, const VehicleGeometry& geom) {
  GameInputRanges out;
  out.ego_accel = resultant_accel(pm.xdd, pm.ydd);
  out.sur_accel = out.ego_accel;

  // Disturbance: omega = a_y / x_dot over the whole box (outer range).
  const double corners[4] = {pm.ydd.lo / pm.x_dot.lo, pm.ydd.lo / pm.x_dot.hi,
                             pm.ydd.hi / pm.x_dot.lo, pm.ydd.hi / pm.x_dot.hi};
  out.sur_omega = {*std::min_element(corners, corners + 4), *std::max_element(corners, corners + 4)};

  // Control: slip angles whose lateral acceleration v * x_dot * sin(beta) / l_r
  // stays inside the a_y box at every speed (inner range, binding at top speed).
  const double v_top = std::hypot(pm.x_dot.hi, max_abs(pm.y_dot));
  const double scale = geom.l_r / (v_top * pm.x_dot.hi);
  auto slip_for = [&](double ay) { return std::asin(std::clamp(ay * scale, -1.0, 1.0)); };
  out.ego_slip = {slip_for(pm.ydd.lo), slip_for(pm.ydd.hi)};
  return out;
}

}  // namespace reachrisk
