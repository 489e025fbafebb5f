#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "reachrisk/hj.hpp"

using namespace reachrisk;

namespace {

// First y1 node above the target with V > 0 along the column of closing rate v.
double first_safe_gap(const HjResult& r, const std::vector<GridAxis>& axes, std::size_t snap, double v) {
  const std::size_t nv = axes[1].count, j = *axes[1].nearest(v);
  for (std::size_t i = 0; i < axes[0].count; ++i) {
    if (axes[0].node(i) > 0 && r.snapshots[snap][i * nv + j] > 0) return axes[0].node(i);
  }
  return INFINITY;
}

}  // namespace

TEST(SeparableTerm, GodunovConsistency) {
  for (bool maximize : {true, false}) {
    const SeparableTerm t{0, {-2.0, 3.0}, maximize};
    for (double p : {-1.5, -0.2, 0.0, 0.7, 2.0}) EXPECT_DOUBLE_EQ(t.flux(p, p), t(p)) << maximize << ' ' << p;
  }
  // h(p) = max(-2p, 3p): max over [p-, p+] when increasing, min when decreasing
  const SeparableTerm cvx{0, {-2.0, 3.0}, true};
  EXPECT_DOUBLE_EQ(cvx.flux(-1.0, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(cvx.flux(1.0, -1.0), 0.0);
  EXPECT_DOUBLE_EQ(cvx.flux(2.0, 1.0), 3.0);
}

TEST(Longitudinal, TargetAtZeroAndMonotone) {
  const LongitudinalGame g({-5.22, 3.354}, {-5.22, 3.354}, 4.0);
  const std::vector<GridAxis> axes{GridAxis(-10, 40, 1.0), GridAxis(-20, 20, 2)};
  const auto r = solve_hj(axes, g, {1.0, 0.0, 2.0});
  ASSERT_EQ(r.horizons, (std::vector<double>{0.0, 1.0, 2.0}));
  const std::size_t nv = axes[1].count;
  for (std::size_t i = 0; i < axes[0].count; ++i) {
    for (std::size_t j = 0; j < nv; ++j) {
      const double x[2] = {axes[0].node(i), axes[1].node(j)};
      EXPECT_EQ(r.snapshots[0][i * nv + j], g.target(x));
      EXPECT_LE(r.snapshots[1][i * nv + j], r.snapshots[0][i * nv + j]);
      EXPECT_LE(r.snapshots[2][i * nv + j], r.snapshots[1][i * nv + j]);
    }
  }
  EXPECT_GT(r.iterations, 0u);
  EXPECT_GT(r.dt, 0.0);
}

TEST(Longitudinal, EqualRangesKeepClosingRate) {
  // both brake at the same limit, so the closing rate never changes: unsafe iff y + v T <= 4
  const LongitudinalGame g({-5.22, 3.354}, {-5.22, 3.354}, 4.0);
  const std::vector<GridAxis> axes{GridAxis(-10, 40, 0.5), GridAxis(-20, 20, 2)};
  for (int order : {1, 2}) {
    HjOptions o;
    o.order = order;
    const auto r = solve_hj(axes, g, {2.0}, o);
    for (double v : {-10.0, -6.0, -2.0, 0.0}) {
      const double exact = std::max(4.0, 4.0 - 2.0 * v);
      EXPECT_NEAR(first_safe_gap(r, axes, 0, v), exact, 0.5 + 1e-9) << "order " << order << " v " << v;
    }
  }
}

TEST(Longitudinal, ConstantAccelerationPursuit) {
  // adversary out-brakes the ego by 3 m/s^2: gap(t) = y + v t - 1.5 t^2
  const LongitudinalGame g({-3.0, 2.0}, {-6.0, 2.0}, 4.0);
  const std::vector<GridAxis> axes{GridAxis(-10, 40, 0.5), GridAxis(-20, 20, 2)};
  const auto r = solve_hj(axes, g, {1.0, 2.0});
  for (double v : {-8.0, -4.0, 0.0, 2.0}) {
    for (std::size_t s = 0; s < 2; ++s) {
      const double T = r.horizons[s];
      const double exact = std::max(4.0, 4.0 - v * T + 1.5 * T * T);
      EXPECT_NEAR(first_safe_gap(r, axes, s, v), exact, 0.5 + 1e-9) << "T " << T << " v " << v;
    }
  }
}

TEST(Longitudinal, WorkersBitIdentical) {
  const LongitudinalGame g({-3.0, 2.0}, {-6.0, 2.0}, 4.0);
  const std::vector<GridAxis> axes{GridAxis(-10, 40, 0.5), GridAxis(-20, 20, 2)};
  HjOptions one, four;
  four.workers = 4;
  EXPECT_EQ(solve_hj(axes, g, {1.5}, one).snapshots, solve_hj(axes, g, {1.5}, four).snapshots);
}

TEST(Longitudinal, RejectsBadInput) {
  EXPECT_THROW(LongitudinalGame({1, -1}, {-1, 1}, 4), std::invalid_argument);
  EXPECT_THROW(LongitudinalGame({-1, 1}, {-1, 1}, 0), std::invalid_argument);
  const LongitudinalGame g({-3.0, 2.0}, {-6.0, 2.0}, 4.0);
  const std::vector<GridAxis> axes{GridAxis(-10, 40, 0.5), GridAxis(-20, 20, 2)};
  EXPECT_THROW(solve_hj(axes, g, {-1.0}), std::invalid_argument);
  HjOptions bad;
  bad.cfl = 0.0;
  EXPECT_THROW(solve_hj(axes, g, {1.0}, bad), std::invalid_argument);
  const std::vector<GridAxis> one_axis{GridAxis(-10, 40, 0.5)};
  EXPECT_THROW(solve_hj(one_axis, g, {1.0}), std::invalid_argument);
}
