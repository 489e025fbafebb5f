#include "reachrisk/framework.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>

namespace reachrisk {

const char* gate_name(GateResult g) { return g == GateResult::kSafe ? "safe" : "escalated"; }

RelativeState relative_state(const PointMassState& ego, const PointMassState& sur) {
  const double he = std::atan2(ego.v2, ego.v1);
  const double hs = std::atan2(sur.v2, sur.v1);
  const double dx = sur.y1 - ego.y1, dy = sur.y2 - ego.y2;
  const double c = std::cos(he), s = std::sin(he);
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(hs - he), std::hypot(ego.v1, ego.v2),
          std::hypot(sur.v1, sur.v2)};
}

GateDecision brs_gate(const ValueTable& table, const RelativeState& x, const GateOptions& opts) {
  GateDecision d;
  d.state = x;
  d.lookup = table.lookup(x);
  if (opts.far_face_safe && d.lookup.clamp[0] > 0) {
    d.result = GateResult::kSafe;
    return d;
  }
  if (opts.escalate_on_clamp && d.lookup.clamped()) {
    d.result = GateResult::kEscalated;
    return d;
  }
  d.result = d.lookup.value <= 0.0 ? GateResult::kEscalated : GateResult::kSafe;
  return d;
}

void FrameworkConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("framework: threshold outside [0, 1]");
  if (!(tick > 0.0)) throw std::invalid_argument("framework: tick must be positive");
  if (!(warmup >= 0.0)) throw std::invalid_argument("framework: warmup must be non-negative");
  if (!(history >= 0.0)) throw std::invalid_argument("framework: history must be non-negative");
  if (!(observation_noise >= 0.0)) throw std::invalid_argument("framework: observation noise must be non-negative");
}

Framework::Framework(std::shared_ptr<const ValueTable> table, std::shared_ptr<const FrsEngine> engine,
                     FrameworkConfig cfg)
    : table_(std::move(table)), engine_(std::move(engine)), cfg_(cfg) {
  if (!table_) throw std::invalid_argument("framework: no BRS value table loaded");
  if (!engine_) throw std::invalid_argument("framework: no FRS engine");
  cfg_.validate();
  if (std::abs(cfg_.tick - engine_->config().dt) > 1e-12) {
    throw std::invalid_argument("framework: tick must equal the FRS step");
  }
}

template <typename ForecastFn>
AssessmentRecord Framework::run(const AssessmentInput& in, ForecastFn&& forecast_fn,
                                const BeliefVector& belief) const {
  if (in.history.empty()) throw std::invalid_argument("assess: empty surrounding history");
  const PointMassState& sur = in.history.back().state;
  AssessmentRecord rec;
  rec.t = in.t;
  rec.belief = belief.probs;

  const GateDecision gate = brs_gate(*table_, relative_state(in.ego, sur), cfg_.gate);
  rec.gate = gate.result;
  rec.gate_value = gate.lookup.value;
  rec.gate_clamped = gate.lookup.clamped();
  if (gate.result == GateResult::kSafe) return rec;

  const AccelerationForecast& forecast = forecast_fn();
  if (in.ego_plan.size() < forecast.size()) {
    throw std::invalid_argument("assess: ego plan shorter than the forecast");
  }
  const StateGrid& grid = engine_->states();
  const PointMassState start{sur.y1 - in.ego.y1, sur.y2 - in.ego.y2, sur.v1, sur.v2};
  const auto fields = engine_->propagate(ProbabilityField::point(grid, start), forecast, belief);
  std::vector<OccupancySet> occ;
  occ.reserve(fields.size());
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const PointMassState& e = in.ego_plan[k];
    occ.emplace_back(grid, k + 1, e.y1 - in.ego.y1, e.y2 - in.ego.y2, cfg_.ego_geometry, cfg_.sur_geometry);
  }
  const CollisionResult col = collision_probability(grid, fields, occ);
  rec.frs_run = true;
  rec.p_col = col.probability;
  rec.step_sums = col.step_sums;
  rec.sum_clamped = col.clamped;
  rec.alert = rec.p_col >= cfg_.threshold;
  return rec;
}

AssessmentRecord Framework::assess(const AssessmentInput& in, const Predictor& predictor,
                                   const BeliefVector& belief) const {
  AccelerationForecast f;
  return run(
      in,
      [&]() -> const AccelerationForecast& {
        f = predictor.forecast(in.history);
        return f;
      },
      belief);
}

AssessmentRecord Framework::assess(const AssessmentInput& in, const AccelerationForecast& forecast,
                                   const BeliefVector& belief) const {
  if (std::abs(forecast.issued_at - in.t) > 1e-6) {
    throw std::invalid_argument("assess: forecast was issued at a different time");
  }
  return run(in, [&]() -> const AccelerationForecast& { return forecast; }, belief);
}

std::vector<TimedValue> EventResult::p_col_series() const {
  std::vector<TimedValue> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.t, r.p_col});
  return out;
}

std::optional<std::size_t> snap_observation(const InputGrid& inputs, const InputConstraintConfig& limits,
                                            double v1, Accel2 a) {
  if (!std::isfinite(a.a1) || !std::isfinite(a.a2)) return std::nullopt;
  const double a1 = std::clamp(a.a1, inputs.a1().min, inputs.a1().max);
  const double a2 = std::clamp(a.a2, inputs.a2().min, inputs.a2().max);
  if (auto id = inputs.nearest_cell(a1, a2)) {
    if (is_admissible(inputs.cell(*id), v1, limits)) return id;
  }
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < inputs.size(); ++id) {
    const InputCell c = inputs.cell(id);
    if (!is_admissible(c, v1, limits)) continue;
    const double d = std::hypot(c.a1 - a1, c.a2 - a2);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

namespace {

std::size_t sample_index(const SimTrace& trace, double t) {
  const double dt = trace.dt();
  const auto i = static_cast<long long>(std::llround((t - trace.samples.front().t) / dt));
  return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(trace.samples.size()) - 1));
}

// ego state at time t; past the end of the trace the last sample coasts at constant velocity
PointMassState ego_at(const SimTrace& trace, double t) {
  const TraceSample& last = trace.samples.back();
  if (t <= last.t + 1e-9) return trace.samples[sample_index(trace, t)].ego;
  PointMassState s = last.ego;
  s.y1 += s.v1 * (t - last.t);
  s.y2 += s.v2 * (t - last.t);
  return s;
}

}  // namespace

EventResult evaluate_event(const SimTrace& trace, const Framework& framework, const Predictor& predictor,
                           BeliefVector belief) {
  if (trace.samples.size() < 2) throw std::invalid_argument("evaluate_event: trace too short");
  belief.validate();
  const FrameworkConfig& cfg = framework.config();
  const double t0 = trace.samples.front().t;
  const double dt = trace.dt();
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    if (std::abs(trace.samples[i].t - trace.samples[i - 1].t - dt) > 1e-6) {
      throw std::invalid_argument("evaluate_event: trace samples are not uniform in time");
    }
  }
  const double t_end = trace.samples.back().t;
  if (t_end - t0 < std::max(cfg.warmup, cfg.history) - 1e-9) {
    throw std::invalid_argument("evaluate_event: trace shorter than the history window");
  }
  const FrsEngine& engine = framework.engine();
  const auto hist_samples = static_cast<std::size_t>(std::llround(cfg.history / dt));

  EventResult out;
  out.crashed = trace.crashed;
  out.crash_time = trace.crash_time;

  std::vector<Observation> obs;
  obs.reserve(trace.samples.size());
  for (const auto& s : trace.samples) obs.push_back({s.t, s.sur, s.sur_accel});

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::deque<AccelerationForecast> forecasts;  // evidence points into this
  std::vector<BeliefEvidence> evidence;
  const auto ticks = static_cast<std::size_t>(std::floor((t_end - t0) / cfg.tick + 1e-9));
  for (std::size_t k = 0; k <= ticks; ++k) {
    const double t = t0 + static_cast<double>(k) * cfg.tick;
    if (trace.crashed && t >= trace.crash_time - 1e-9) break;
    const std::size_t idx = sample_index(trace, t);
    const std::size_t first = idx > hist_samples ? idx - hist_samples : 0;
    const std::span<const Observation> history(obs.data() + first, idx - first + 1);

    if (k > 0) {
      const TraceSample& a = trace.samples[sample_index(trace, t - cfg.tick)];
      const TraceSample& b = trace.samples[idx];
      Accel2 observed{(b.sur.v1 - a.sur.v1) / cfg.tick, (b.sur.v2 - a.sur.v2) / cfg.tick};
      if (cfg.observation_noise > 0.0) {
        observed.a1 += cfg.observation_noise * noise(rng);
        observed.a2 += cfg.observation_noise * noise(rng);
      }
      const auto cell = snap_observation(engine.inputs(), engine.limits(), a.sur.v1, observed);
      if (cell) {
        evidence.push_back({&forecasts[k - 1], 0, forecasts[k - 1].issued_at, a.sur.v1, *cell});
        belief = update(belief, evidence, engine.inputs(), engine.limits()).belief;
        ++out.belief_updates;
      } else {
        ++out.skipped_observations;
      }
    }
    forecasts.push_back(predictor.forecast(history));
    const AccelerationForecast& f = forecasts.back();

    if (t < t0 + cfg.warmup - 1e-9) continue;
    std::vector<PointMassState> plan;
    plan.reserve(f.size());
    for (std::size_t j = 1; j <= f.size(); ++j) plan.push_back(ego_at(trace, t + static_cast<double>(j) * f.dt));
    const AssessmentInput in{t, trace.samples[idx].ego, plan, history};
    AssessmentRecord rec = framework.assess(in, f, belief);
    out.max_p_col = std::max(out.max_p_col, rec.p_col);
    if (rec.gate == GateResult::kEscalated) {
      ++out.escalations;
      if (!out.first_escalation) out.first_escalation = t;
    }
    if (rec.alert) {
      ++out.alerts;
      if (!out.first_alert) out.first_alert = t;
    }
    out.records.push_back(std::move(rec));
  }
  out.false_positive = !trace.crashed && out.alerts > 0;
  if (trace.crashed) {
    const auto series = out.p_col_series();
    out.timeliness = timeliness(series, trace.crash_time, cfg.threshold);
  }
  return out;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kHsrs: return "HSRS";
    case Variant::kPsrs: return "PSRS";
    case Variant::kPsrs3: return "PSRS-3beta";
    case Variant::kPsrs5: return "PSRS-5beta";
  }
  return "?";
}

std::optional<Variant> parse_variant(const std::string& name) {
  for (Variant v : kAllVariants) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

std::vector<double> variant_betas(Variant v) {
  switch (v) {
    case Variant::kPsrs3: return beta_presets::kThree;
    case Variant::kPsrs5: return beta_presets::kFive;
    default: return beta_presets::kSingle;
  }
}

bool variant_uses_heuristic(Variant v) { return v == Variant::kHsrs; }

}  // namespace reachrisk
