#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reachrisk/belief.hpp"
#include "reachrisk/brs.hpp"
#include "reachrisk/frs.hpp"
#include "reachrisk/predictor.hpp"
#include "reachrisk/scenario.hpp"

namespace reachrisk {

enum class GateResult { kSafe, kEscalated };
const char* gate_name(GateResult g);

struct GateOptions {
  bool far_face_safe = true;      // beyond the largest y1 node counts as safe
  bool escalate_on_clamp = true;  // clamped on any other face escalates
};

struct GateDecision {
  GateResult result = GateResult::kEscalated;
  RelativeState state;
  LookupResult lookup;
};

/// Relative state of `sur` in the body frame of `ego`; headings come from the velocity directions.
RelativeState relative_state(const PointMassState& ego, const PointMassState& sur);

GateDecision brs_gate(const ValueTable& table, const RelativeState& x, const GateOptions& opts = {});

struct FrameworkConfig {
  double threshold = 0.05;
  double tick = 0.4;     // s, assessment period
  double warmup = 2.0;   // s without assessments
  double history = 2.0;  // s of observations handed to the predictor
  GateOptions gate;
  double observation_noise = 0.0;  // std of Gaussian noise on observed accelerations, m/s^2
  std::uint64_t seed = 0;
  VehicleGeometry ego_geometry;
  VehicleGeometry sur_geometry;

  void validate() const;
};

struct AssessmentRecord {
  double t = 0.0;
  GateResult gate = GateResult::kSafe;
  double gate_value = 0.0;
  bool gate_clamped = false;
  bool frs_run = false;
  double p_col = 0.0;
  bool alert = false;
  bool sum_clamped = false;
  std::vector<double> step_sums;
  std::vector<double> belief;
};

/// One assessment instant. Positions are absolute; the FRS frame is anchored at `ego`.
struct AssessmentInput {
  double t = 0.0;
  PointMassState ego;
  std::span<const PointMassState> ego_plan;  // ego states at t + k * dt, k = 1..steps
  std::span<const Observation> history;      // surrounding vehicle, oldest first
};

class Framework {
 public:
  /// Throws std::invalid_argument when the table or engine is missing.
  Framework(std::shared_ptr<const ValueTable> table, std::shared_ptr<const FrsEngine> engine,
            FrameworkConfig cfg);

  const FrameworkConfig& config() const { return cfg_; }
  const FrsEngine& engine() const { return *engine_; }
  const ValueTable& table() const { return *table_; }

  /// Gate, then (only when escalated) forecast, FRS propagation and P_col.
  AssessmentRecord assess(const AssessmentInput& in, const Predictor& predictor,
                          const BeliefVector& belief) const;
  /// Same with a forecast already issued at in.t.
  AssessmentRecord assess(const AssessmentInput& in, const AccelerationForecast& forecast,
                          const BeliefVector& belief) const;

 private:
  template <typename ForecastFn>
  AssessmentRecord run(const AssessmentInput& in, ForecastFn&& forecast, const BeliefVector& belief) const;

  std::shared_ptr<const ValueTable> table_;
  std::shared_ptr<const FrsEngine> engine_;
  FrameworkConfig cfg_;
};

struct EventResult {
  std::vector<AssessmentRecord> records;
  bool crashed = false;
  double crash_time = 0.0;
  double max_p_col = 0.0;
  std::size_t alerts = 0;
  std::size_t escalations = 0;
  bool false_positive = false;  // alert in a crash-free event
  std::optional<double> first_escalation;
  std::optional<double> first_alert;
  std::optional<double> timeliness;  // at the framework threshold
  std::size_t belief_updates = 0;
  std::size_t skipped_observations = 0;  // observed accelerations with no admissible cell

  std::vector<TimedValue> p_col_series() const;
};

/// Observed acceleration snapped to an input cell admissible at v1: nearest
/// cell after clamping into the grid, else the closest admissible cell.
std::optional<std::size_t> snap_observation(const InputGrid& inputs, const InputConstraintConfig& limits,
                                            double v1, Accel2 a);

/// Runs assess every tick after the warm-up and updates the belief every tick
/// from the surrounding vehicle's observed accelerations.
EventResult evaluate_event(const SimTrace& trace, const Framework& framework, const Predictor& predictor,
                           BeliefVector belief);

enum class Variant { kHsrs, kPsrs, kPsrs3, kPsrs5 };
inline constexpr Variant kAllVariants[] = {Variant::kHsrs, Variant::kPsrs, Variant::kPsrs3, Variant::kPsrs5};
const char* variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);
/// Confidence set used by a variant: {1} for HSRS and PSRS, the 3- and 5-beta presets otherwise.
std::vector<double> variant_betas(Variant v);
bool variant_uses_heuristic(Variant v);

}  // namespace reachrisk
