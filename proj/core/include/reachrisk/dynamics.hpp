#pragma once

#include <array>

namespace reachrisk {

/// Surrounding vehicle in the point-mass model used by the FRS.
struct PointMassState {
  double y1 = 0.0;  // longitudinal position, m
  double y2 = 0.0;  // lateral position, m
  double v1 = 0.0;  // longitudinal velocity, m/s
  double v2 = 0.0;  // lateral velocity, m/s
};

struct Accel2 {
  double a1 = 0.0;
  double a2 = 0.0;
};

/// Trapezoidal update: v' = v + a dt, y' = y + (v + v') dt / 2 per axis.
PointMassState step_point_mass(const PointMassState& s, Accel2 a, double dt);

/// 5-D relative state of the BRS game, expressed in the ego body frame.
struct RelativeState {
  double y1 = 0.0;   // relative longitudinal position, m
  double y2 = 0.0;   // relative lateral position, m
  double psi = 0.0;  // relative heading, rad, wrapped to [-pi, pi)
  double v_ego = 0.0;
  double v_s = 0.0;

  std::array<double, 5> as_array() const { return {y1, y2, psi, v_ego, v_s}; }
};

struct VehicleGeometry {
  double length = 4.0;
  double width = 2.0;
  double l_f = 1.058;
  double l_r = 1.738;
};

struct EgoInput {
  double accel = 0.0;  // a_ego
  double slip = 0.0;   // beta_ego, rad
};

struct SurroundingInput {
  double accel = 0.0;  // a_s
  double omega = 0.0;  // rad/s
};

double wrap_angle(double angle);

/// Time derivative (y1, y2, psi, v_ego, v_s) of the relative bicycle/unicycle system.
std::array<double, 5> relative_deriv(const RelativeState& x, EgoInput ego, SurroundingInput sur,
                                     const VehicleGeometry& geom);

/// Slip angle from the front steering angle.
double slip_angle(double steer, const VehicleGeometry& geom);

struct BodyAccel {
  double ax = 0.0;
  double ay = 0.0;
};

/// Global-frame (Xdd, Ydd) to body-frame (a_x, a_y). Throws if x_dot <= 0.
BodyAccel accel_global_to_body(double xdd, double ydd, double psi, double x_dot, double y_dot);

/// Forward map body-frame (a_x, a_y) to global (Xdd, Ydd).
std::array<double, 2> accel_body_to_global(double ax, double ay, double psi, double x_dot,
                                           double y_dot);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct PointMassRanges {
  Interval xdd{-5.0, 3.0};    // m/s^2
  Interval ydd{-1.5, 1.5};    // m/s^2
  Interval x_dot{20.0, 40.0};  // m/s
  Interval y_dot{-1.5, 1.5};   // m/s
};

struct GameInputRanges {
  Interval ego_accel;
  Interval ego_slip;
  Interval sur_accel;
  Interval sur_omega;
};

/// Map point-mass input ranges to bicycle/unicycle input ranges.
GameInputRanges derive_input_ranges(const PointMassRanges& pm, const VehicleGeometry& geom);

}  // namespace reachrisk
