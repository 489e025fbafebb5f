#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reachrisk/dynamics.hpp"

namespace reachrisk {

struct IdmParams {
  double v0 = 36.1;          // desired speed, m/s
  double time_headway = 0.8;  // s
  double min_gap = 6.0;       // m
  double accel = 1.0;         // a_a, m/s^2
  double decel = 1.0;         // a_b, m/s^2
  double accel_floor = -8.0;  // a_min, m/s^2
};

/// IDM acceleration. `gap` is the bumper-to-bumper distance to the leader and
/// `dv` the approach rate v - v_leader; pass no gap when there is no leader.
/// Throws if a leader is present with gap <= 0.
double idm_accel(double v, double dv, std::optional<double> gap, const IdmParams& p);

struct LateralSample {
  double y = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// Quintic lane-change profile y = W (10 tau^3 - 15 tau^4 + 6 tau^5), tau = t / D,
/// held at the endpoints outside [0, D].
LateralSample lateral_profile(double t, double duration, double lane_width);

struct ScenarioConfig {
  double v_ego = 30.0;
  double v_sur = 25.0;
  double gap = 15.0;          // centre distance at gap_time, m
  double gap_time = 1.0;      // s
  double lc_start = 1.0;      // s
  double lc_duration = 7.5;   // s
  double lane_width = 3.75;   // m
  double sim_dt = 0.1;        // s
  double duration = 12.0;     // s
  double sur_desired_speed = 36.1;
  IdmParams idm{};            // shared T, s0, a_a, a_b, a_min; v0 set per vehicle
  VehicleGeometry geometry{};
  double leader_lateral_threshold = 3.75 / 2.0;  // lateral offset below which the surrounding leads

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

/// The scripted surrounding-vehicle behaviour: free-road IDM plus the
/// lane-change profile starting at `lc_start`.
class SurroundingModel {
 public:
  explicit SurroundingModel(ScenarioConfig cfg);

  const ScenarioConfig& config() const { return cfg_; }

  /// Scripted acceleration at absolute time t. `lateral_sign` +1 follows the
  /// scripted left change, -1 mirrors it, 0 suppresses lateral motion.
  /// `maneuver_start` overrides the scripted start time.
  Accel2 accel(double t, const PointMassState& s, double lateral_sign = 1.0,
               std::optional<double> maneuver_start = std::nullopt) const;

  IdmParams idm() const;

 private:
  ScenarioConfig cfg_;
};

struct TraceSample {
  double t = 0.0;
  PointMassState ego;
  Accel2 ego_accel;
  PointMassState sur;
  Accel2 sur_accel;
};

struct SimTrace {
  std::vector<TraceSample> samples;
  bool crashed = false;
  double crash_time = 0.0;

  /// Sample at or just before t (samples are uniform in time).
  const TraceSample& at(double t) const;
  double dt() const;
};

bool in_collision(const PointMassState& a, const PointMassState& b, const VehicleGeometry& geom);

SimTrace simulate(const ScenarioConfig& cfg);

struct SweepEvent {
  double v_ego = 0.0;
  double v_sur = 0.0;
  bool crashed = false;
  double crash_time = 0.0;
};

struct SweepRange {
  double lo = 20.0;
  double hi = 35.0;
  double step = 1.0;
  std::vector<double> values() const;
};

/// Cartesian sweep over initial speeds; events ordered ego-major.
std::vector<SweepEvent> sweep(const ScenarioConfig& base, const SweepRange& ego,
                              const SweepRange& sur, std::size_t workers = 1);

struct CrashBand {
  std::size_t crashes = 0;
  double min_diff = 0.0;  // smallest v_ego - v_sur with a crash
  double max_diff = 0.0;
  bool contiguous = false;  // every difference between min and max has a crash
};

CrashBand crash_band(std::span<const SweepEvent> events, double diff_step = 1.0);

struct TimedValue {
  double t = 0.0;
  double value = 0.0;
};

/// Time left before the crash when the series first reaches threshold; empty
/// if it never does before the crash.
std::optional<double> timeliness(std::span<const TimedValue> series, double crash_time,
                                 double threshold);

/// CSV with columns t,vehicle_id,y1,y2,v1,v2,a1,a2 (vehicle 0 = ego, 1 = surrounding).
void write_trace_csv(std::ostream& os, const SimTrace& trace);
/// Reads the same format; the crash flag is recomputed from positions.
SimTrace read_trace_csv(std::istream& is, const VehicleGeometry& geom);

}  // namespace reachrisk
