#include <atomic>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "reachrisk/config.hpp"
#include "reachrisk/framework.hpp"

using namespace reachrisk;

namespace {

std::shared_ptr<const ValueTable> constant_table(float v) {
  auto t = std::make_shared<ValueTable>();
  t->grid = {{GridAxis(-10, 40, 10), GridAxis(-4, 4, 4), GridAxis(-0.8, 0.8, 0.8), GridAxis(20, 40, 10),
              GridAxis(20, 40, 10)}};
  t->horizon = 2.0;
  t->values.assign(t->grid.size(), v);
  return t;
}

class CountingPredictor final : public Predictor {
 public:
  explicit CountingPredictor(std::unique_ptr<Predictor> inner) : inner_(std::move(inner)) {}
  AccelerationForecast forecast(std::span<const Observation> h) const override {
    ++calls;
    return inner_->forecast(h);
  }
  std::string name() const override { return "counting"; }
  mutable std::atomic<int> calls{0};

 private:
  std::unique_ptr<Predictor> inner_;
};

struct Rig {
  RunConfig cfg;
  std::shared_ptr<FrsEngine> engine = make_engine(cfg);
  Framework with(std::shared_ptr<const ValueTable> t, double threshold = 0.05) const {
    FrameworkConfig fc = make_framework_config(cfg);
    fc.threshold = threshold;
    return Framework(std::move(t), engine, fc);
  }
  SimTrace trace(double v_sur) const {
    ScenarioConfig sc = cfg.scenario;
    sc.v_sur = v_sur;
    return simulate(sc);
  }
  EventResult run(const Framework& fw, double v_sur, Variant v = Variant::kPsrs5) const {
    ScenarioConfig sc = cfg.scenario;
    sc.v_sur = v_sur;
    const auto p = make_predictor(cfg, v, sc);
    return evaluate_event(simulate(sc), fw, *p, init_uniform(variant_betas(v)));
  }
};

}  // namespace

TEST(RelativeState, RotatesIntoEgoFrame) {
  const auto a = relative_state({0, 0, 30, 0}, {10, -2, 28, 0.5});
  EXPECT_NEAR(a.y1, 10, 1e-12);
  EXPECT_NEAR(a.y2, -2, 1e-12);
  EXPECT_NEAR(a.psi, std::atan2(0.5, 28), 1e-12);
  EXPECT_NEAR(a.v_s, std::hypot(28, 0.5), 1e-12);
  // ego heading 90 degrees: a vehicle 10 m further along +y2 is straight ahead
  const auto b = relative_state({0, 0, 0.0, 30}, {0, 10, 0.0, 30});
  EXPECT_NEAR(b.y1, 10, 1e-12);
  EXPECT_NEAR(b.y2, 0, 1e-12);
  EXPECT_NEAR(b.psi, 0, 1e-12);
}

TEST(Gate, Rules) {
  const auto unsafe = constant_table(-1.0f), safe = constant_table(1.0f);
  EXPECT_EQ(brs_gate(*unsafe, {5, 0, 0, 30, 30}).result, GateResult::kEscalated);
  EXPECT_EQ(brs_gate(*safe, {5, 0, 0, 30, 30}).result, GateResult::kSafe);
  // beyond the far y1 face
  EXPECT_EQ(brs_gate(*unsafe, {60, 0, 0, 30, 30}).result, GateResult::kSafe);
  // clamped elsewhere
  EXPECT_EQ(brs_gate(*safe, {5, -6, 0, 30, 30}).result, GateResult::kEscalated);
  EXPECT_EQ(brs_gate(*safe, {-20, 0, 0, 30, 30}).result, GateResult::kEscalated);
  GateOptions lax;
  lax.escalate_on_clamp = false;
  EXPECT_EQ(brs_gate(*safe, {5, -6, 0, 30, 30}, lax).result, GateResult::kSafe);
  lax.far_face_safe = false;
  EXPECT_EQ(brs_gate(*unsafe, {60, 0, 0, 30, 30}, lax).result, GateResult::kEscalated);
  EXPECT_EQ(std::string(gate_name(GateResult::kSafe)), "safe");
}

TEST(Framework, ConstructionChecks) {
  Rig rig;
  const FrameworkConfig fc = make_framework_config(rig.cfg);
  EXPECT_THROW(Framework(nullptr, rig.engine, fc), std::invalid_argument);
  EXPECT_THROW(Framework(constant_table(1), nullptr, fc), std::invalid_argument);
  FrameworkConfig off = fc;
  off.tick = 0.2;
  EXPECT_THROW(Framework(constant_table(1), rig.engine, off), std::invalid_argument);
  FrameworkConfig bad = fc;
  bad.threshold = 2;
  EXPECT_THROW(Framework(constant_table(1), rig.engine, bad), std::invalid_argument);
}

TEST(Framework, SafeGateSkipsPrediction) {
  Rig rig;
  const Framework fw = rig.with(constant_table(5.0f));
  CountingPredictor p(make_predictor(rig.cfg, Variant::kPsrs, rig.cfg.scenario));
  const SimTrace t = rig.trace(25);
  std::vector<Observation> hist;
  for (std::size_t i = 0; i <= 20; ++i) hist.push_back({t.samples[i].t, t.samples[i].sur, t.samples[i].sur_accel});
  std::vector<PointMassState> plan;
  for (std::size_t k = 1; k <= 5; ++k) plan.push_back(t.samples[20 + 4 * k].ego);
  const AssessmentInput in{2.0, t.samples[20].ego, plan, hist};
  const auto rec = fw.assess(in, p, init_uniform({1.0}));
  EXPECT_EQ(rec.gate, GateResult::kSafe);
  EXPECT_FALSE(rec.frs_run);
  EXPECT_EQ(rec.p_col, 0.0);
  EXPECT_EQ(p.calls, 0);

  const Framework hot = rig.with(constant_table(-5.0f));
  const auto esc = hot.assess(in, p, init_uniform({1.0}));
  EXPECT_EQ(esc.gate, GateResult::kEscalated);
  EXPECT_TRUE(esc.frs_run);
  EXPECT_EQ(p.calls, 1);
  EXPECT_EQ(esc.step_sums.size(), 5u);
  EXPECT_EQ(esc.alert, esc.p_col >= 0.05);

  const AccelerationForecast f = p.forecast(hist);
  AssessmentInput late = in;
  late.t = 2.4;
  EXPECT_THROW(hot.assess(late, f, init_uniform({1.0})), std::invalid_argument);
  AssessmentInput empty = in;
  empty.history = {};
  EXPECT_THROW(hot.assess(empty, p, init_uniform({1.0})), std::invalid_argument);
}

TEST(Framework, EventTimelineWithAlwaysUnsafeGate) {
  Rig rig;
  const Framework fw = rig.with(constant_table(-1.0f));
  const EventResult r = rig.run(fw, 25);
  ASSERT_TRUE(r.crashed);
  ASSERT_FALSE(r.records.empty());
  EXPECT_NEAR(r.records.front().t, 2.0, 1e-9);
  for (const auto& rec : r.records) {
    EXPECT_LT(rec.t, r.crash_time);
    EXPECT_EQ(rec.gate, GateResult::kEscalated);
    EXPECT_EQ(rec.alert, rec.p_col >= 0.05);
    EXPECT_EQ(rec.belief.size(), 5u);
  }
  EXPECT_GT(r.alerts, 0u);
  ASSERT_TRUE(r.timeliness);
  EXPECT_NEAR(*r.timeliness, r.crash_time - *r.first_alert, 1e-12);
  EXPECT_GE(r.records.back().p_col, 0.9);
  EXPECT_GT(r.belief_updates, 0u);
}

TEST(Framework, SafeGateMeansNoAlerts) {
  Rig rig;
  const Framework fw = rig.with(constant_table(3.0f));
  const EventResult r = rig.run(fw, 25);
  EXPECT_EQ(r.escalations, 0u);
  EXPECT_EQ(r.alerts, 0u);
  EXPECT_EQ(r.max_p_col, 0.0);
  EXPECT_FALSE(r.timeliness);
  const EventResult s = rig.run(fw, 28);
  EXPECT_FALSE(s.false_positive);
}

TEST(Framework, AlertSetShrinksWithThreshold) {
  Rig rig;
  std::vector<bool> prev;
  for (double thr : {0.0, 0.05, 0.2, 0.5, 0.9, 1.0}) {
    const EventResult r = rig.run(rig.with(constant_table(-1.0f), thr), 25);
    std::vector<bool> alerts;
    for (const auto& rec : r.records) alerts.push_back(rec.alert);
    if (!prev.empty()) {
      ASSERT_EQ(prev.size(), alerts.size());
      for (std::size_t i = 0; i < alerts.size(); ++i) EXPECT_TRUE(prev[i] || !alerts[i]);
    }
    prev = alerts;
  }
}

TEST(Framework, NoiseIsSeeded) {
  Rig rig;
  rig.cfg.observation_noise = 0.5;
  rig.cfg.seed = 11;
  const EventResult a = rig.run(rig.with(constant_table(-1.0f)), 25);
  const EventResult b = rig.run(rig.with(constant_table(-1.0f)), 25);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].belief, b.records[i].belief);
    EXPECT_EQ(a.records[i].p_col, b.records[i].p_col);
  }
}

TEST(Framework, RejectsBadTraces) {
  Rig rig;
  const Framework fw = rig.with(constant_table(1.0f));
  const auto p = make_predictor(rig.cfg, Variant::kPsrs, rig.cfg.scenario);
  SimTrace t = rig.trace(25);
  SimTrace short_trace = t;
  short_trace.samples.resize(10);
  EXPECT_THROW(evaluate_event(short_trace, fw, *p, init_uniform({1.0})), std::invalid_argument);
  SimTrace uneven = t;
  uneven.samples[5].t += 0.05;
  EXPECT_THROW(evaluate_event(uneven, fw, *p, init_uniform({1.0})), std::invalid_argument);
}

TEST(SnapObservation, NearestAdmissible) {
  const InputGrid g;
  const InputConstraintConfig lim;
  EXPECT_EQ(snap_observation(g, lim, 30, {0.2, -0.1}), g.nearest_cell(0, 0));
  EXPECT_EQ(snap_observation(g, lim, 30, {-9, 0}), g.nearest_cell(-5, 0));
  // (-5, 1.5) violates the magnitude limit; the closest admissible cell is taken
  const auto c = snap_observation(g, lim, 30, {-5, 1.5});
  ASSERT_TRUE(c);
  EXPECT_TRUE(is_admissible(g.cell(*c), 30, lim));
  EXPECT_FALSE(snap_observation(g, lim, 30, {std::nan(""), 0}));
}

TEST(Variants, NamesAndBetas) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_FALSE(parse_variant("PSRS-7beta"));
  EXPECT_EQ(variant_betas(Variant::kPsrs5).size(), 5u);
  EXPECT_EQ(variant_betas(Variant::kPsrs3).size(), 3u);
  EXPECT_EQ(variant_betas(Variant::kHsrs), std::vector<double>{1.0});
  EXPECT_TRUE(variant_uses_heuristic(Variant::kHsrs));
  EXPECT_FALSE(variant_uses_heuristic(Variant::kPsrs));
}
