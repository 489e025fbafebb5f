#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "reachrisk/scenario.hpp"

using namespace reachrisk;

TEST(Idm, Examples) {
  IdmParams p;
  EXPECT_NEAR(idm_accel(36.1, 0.0, std::nullopt, p), 0.0, 1e-15);
  // s* = 6 + 25 * 0.8 = 26
  const double a = idm_accel(25.0, 0.0, 30.0, p);
  EXPECT_NEAR(a, 1.0 - std::pow(25 / 36.1, 4) - std::pow(26.0 / 30.0, 2), 1e-15);
  EXPECT_NEAR(a, 0.019, 1e-3);
  EXPECT_EQ(idm_accel(30.0, 0.0, 6.0, p), p.accel_floor);
  EXPECT_THROW(idm_accel(30.0, 0.0, 0.0, p), std::invalid_argument);
  EXPECT_THROW(idm_accel(30.0, 0.0, -1.0, p), std::invalid_argument);
}

TEST(Idm, NeverAboveMaxAccel) {
  IdmParams p;
  for (double v = 0; v <= 45; v += 1.5) {
    for (double dv = -10; dv <= 10; dv += 2.5) {
      EXPECT_LE(idm_accel(v, dv, std::nullopt, p), p.accel);
      for (double s = 1; s < 200; s *= 2) EXPECT_LE(idm_accel(v, dv, s, p), p.accel);
    }
  }
}

TEST(LateralProfile, Endpoints) {
  const double W = 3.75, D = 7.5;
  const auto s0 = lateral_profile(0.0, D, W);
  EXPECT_EQ(s0.y, 0.0);
  EXPECT_EQ(s0.v, 0.0);
  EXPECT_EQ(s0.a, 0.0);
  const auto s1 = lateral_profile(D, D, W);
  EXPECT_DOUBLE_EQ(s1.y, W);
  EXPECT_EQ(s1.v, 0.0);
  EXPECT_EQ(s1.a, 0.0);
  EXPECT_NEAR(lateral_profile(D / 2, D, W).y, W / 2, 1e-14);
  EXPECT_DOUBLE_EQ(lateral_profile(2 * D, D, W).y, W);
  EXPECT_EQ(lateral_profile(-1.0, D, W).y, 0.0);
}

TEST(LateralProfile, DerivativesMatchDifferences) {
  const double W = 3.75, D = 7.5, h = 1e-5;
  for (double t = 0.5; t < D; t += 0.7) {
    const auto s = lateral_profile(t, D, W);
    EXPECT_NEAR(s.v, (lateral_profile(t + h, D, W).y - lateral_profile(t - h, D, W).y) / (2 * h), 1e-8);
    EXPECT_NEAR(s.a, (lateral_profile(t + h, D, W).v - lateral_profile(t - h, D, W).v) / (2 * h), 1e-8);
  }
}

TEST(Simulate, ReferenceEvents) {
  ScenarioConfig c;
  c.v_ego = 30;
  c.v_sur = 25;
  const SimTrace crash = simulate(c);
  EXPECT_TRUE(crash.crashed);
  EXPECT_NEAR(crash.crash_time, 5.0, 0.5);
  EXPECT_TRUE(in_collision(crash.samples.back().ego, crash.samples.back().sur, c.geometry));

  // gap at t = 1 s is 15 m
  const auto& at1 = crash.at(1.0);
  EXPECT_NEAR(at1.sur.y1 - at1.ego.y1, 15.0, 1e-9);

  c.v_sur = 28;
  const SimTrace safe = simulate(c);
  EXPECT_FALSE(safe.crashed);
  EXPECT_NEAR(safe.samples.back().t, c.duration, 1e-9);
}

TEST(Simulate, EquilibriumKeepsGap) {
  ScenarioConfig c;
  c.v_ego = c.v_sur = c.sur_desired_speed = 30;
  c.lc_start = 100;
  const SimTrace t = simulate(c);
  EXPECT_FALSE(t.crashed);
  for (const auto& s : t.samples) EXPECT_NEAR(s.sur.y1 - s.ego.y1, 15.0, 1e-9);
}

TEST(Simulate, Deterministic) {
  ScenarioConfig c;
  const SimTrace a = simulate(c), b = simulate(c);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].ego.y1, b.samples[i].ego.y1);
    EXPECT_EQ(a.samples[i].sur.y2, b.samples[i].sur.y2);
  }
  ScenarioConfig bad;
  bad.sim_dt = 0;
  EXPECT_THROW(simulate(bad), std::invalid_argument);
}

TEST(Sweep, BandStructure) {
  const auto events = sweep(ScenarioConfig{}, {20, 35, 1}, {20, 35, 1}, 2);
  ASSERT_EQ(events.size(), 256u);
  EXPECT_EQ(events[1].v_ego, 20);
  EXPECT_EQ(events[1].v_sur, 21);
  for (const auto& e : events) {
    if (e.v_ego == e.v_sur) EXPECT_FALSE(e.crashed);
  }
  const CrashBand band = crash_band(events);
  EXPECT_GT(band.crashes, 0u);
  EXPECT_GE(band.min_diff, 3.0);
  EXPECT_TRUE(band.contiguous);
  // worker count does not change the table
  const auto serial = sweep(ScenarioConfig{}, {20, 35, 1}, {20, 35, 1}, 1);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].crashed, serial[i].crashed);
    EXPECT_EQ(events[i].crash_time, serial[i].crash_time);
  }
}

TEST(CrashBand, Contiguity) {
  const std::vector<SweepEvent> gap{{30, 26, true, 5}, {30, 24, true, 4}, {30, 29, false, 0}};
  const CrashBand b = crash_band(gap);
  EXPECT_EQ(b.crashes, 2u);
  EXPECT_EQ(b.min_diff, 4.0);
  EXPECT_EQ(b.max_diff, 6.0);
  EXPECT_FALSE(b.contiguous);
  EXPECT_EQ(crash_band(std::vector<SweepEvent>{}).crashes, 0u);
}

TEST(Timeliness, Examples) {
  const std::vector<TimedValue> s{{2.0, 0.0}, {2.4, 0.01}, {2.8, 0.06}, {3.2, 0.5}};
  EXPECT_NEAR(*timeliness(s, 5.0, 0.05), 2.2, 1e-12);
  EXPECT_FALSE(timeliness(s, 5.0, 0.9));
  EXPECT_NEAR(*timeliness(s, 5.0, 0.0), 2.6, 1e-12);
  EXPECT_FALSE(timeliness(s, 2.6, 0.05));
}

TEST(TraceCsv, RoundTrip) {
  ScenarioConfig c;
  const SimTrace t = simulate(c);
  std::stringstream ss;
  write_trace_csv(ss, t);
  const SimTrace r = read_trace_csv(ss, c.geometry);
  ASSERT_EQ(r.samples.size(), t.samples.size());
  EXPECT_EQ(r.crashed, t.crashed);
  EXPECT_NEAR(r.crash_time, t.crash_time, 1e-9);
  for (std::size_t i = 0; i < t.samples.size(); i += 7) {
    EXPECT_NEAR(r.samples[i].sur.y2, t.samples[i].sur.y2, 1e-9);
    EXPECT_NEAR(r.samples[i].ego.v1, t.samples[i].ego.v1, 1e-9);
  }
}

TEST(TraceCsv, RejectsMalformed) {
  std::stringstream bad_header("time,id\n");
  EXPECT_THROW(read_trace_csv(bad_header, {}), std::runtime_error);
  std::stringstream short_row("t,vehicle_id,y1,y2,v1,v2,a1,a2\n0,0,1,2\n");
  EXPECT_THROW(read_trace_csv(short_row, {}), std::runtime_error);
  std::stringstream missing("t,vehicle_id,y1,y2,v1,v2,a1,a2\n0,0,0,0,30,0,0,0\n0.1,0,3,0,30,0,0,0\n0.1,1,20,0,30,0,0,0\n");
  EXPECT_THROW(read_trace_csv(missing, {}), std::runtime_error);
}
