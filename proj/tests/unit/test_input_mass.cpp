#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "reachrisk/grid.hpp"
#include "reachrisk/input_mass.hpp"

using namespace reachrisk;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

ForecastStep single_mode(const BivariateNormal& d) {
  ForecastStep s;
  s.modes = {d, d, d};
  s.mode_prob = {1.0, 0.0, 0.0};
  return s;
}

const std::vector<double> kOne{1.0};

}  // namespace

TEST(NormalIntervalMass, MatchesErfc) {
  EXPECT_NEAR(normal_interval_mass(-1, 1, 0, 1), phi(1) - phi(-1), 1e-15);
  EXPECT_NEAR(normal_interval_mass(0.5, 2.0, 1.0, 0.5), phi(2.0) - phi(-1.0), 1e-15);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(normal_interval_mass(-inf, inf, 3, 2), 1.0, 1e-15);
  // far tail keeps relative precision
  const double tail = 0.5 * std::erfc(9.0 / std::numbers::sqrt2);
  EXPECT_NEAR(normal_interval_mass(9, inf, 0, 1) / tail, 1.0, 1e-10);
  EXPECT_NEAR(normal_interval_mass(-inf, -9, 0, 1) / tail, 1.0, 1e-10);
}

TEST(CellMass, SeparableWithoutCorrelation) {
  const BivariateNormal d{0.3, -0.4, 0.8, 0.6, 0.0};
  const InputGrid g;
  for (std::size_t id = 0; id < g.size(); id += 5) {
    const InputCell c = g.cell(id);
    const double expected = (phi((c.hi1 - d.mu1) / d.sigma1) - phi((c.lo1 - d.mu1) / d.sigma1)) *
                            (phi((c.hi2 - d.mu2) / d.sigma2) - phi((c.lo2 - d.mu2) / d.sigma2));
    EXPECT_NEAR(cell_mass(d, c), expected, 1e-12) << id;
  }
}

TEST(CellMass, CorrelatedAgainstMidpointRule) {
  const BivariateNormal d{-0.7, 0.2, 1.3, 0.9, 0.75};
  const InputGrid g;
  for (std::size_t id : {0u, 17u, 31u, 44u, 62u}) {
    const InputCell c = g.cell(id);
    const int n = 800;
    const double w1 = (c.hi1 - c.lo1) / n, w2 = (c.hi2 - c.lo2) / n;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) sum += pdf(d, c.lo1 + (i + 0.5) * w1, c.lo2 + (j + 0.5) * w2);
    }
    EXPECT_NEAR(cell_mass(d, c), sum * w1 * w2, 1e-7) << id;
  }
}

TEST(CellMass, TinySigmaConcentrates) {
  const InputGrid g;
  const InputCell c = g.cell(*g.nearest_cell(1.0, 0.5));
  EXPECT_GE(cell_mass({1.0, 0.5, 0.01, 0.01, 0.0}, c), 0.999);
  EXPECT_GE(cell_mass({1.0, 0.5, 0.01, 0.01, 0.6}, c), 0.999);
}

TEST(CellMass, TailCellsCaptureEverything) {
  const InputGrid g(GridAxis(-5, 3, 1), GridAxis(-1.5, 1.5, 0.5), true);
  const BivariateNormal d{0.5, 0.3, 2.0, 1.5, -0.5};
  double total = 0;
  for (std::size_t id = 0; id < g.size(); ++id) total += cell_mass(d, g.cell(id));
  EXPECT_NEAR(total, 1.0, 1e-7);
}

TEST(InputCellMass, MonteCarloOracle) {
  std::mt19937_64 rng(2024);
  const InputGrid g;
  std::uniform_real_distribution<double> mu1(-4, 2), mu2(-1, 1), sig(0.3, 2.0), rho(-0.8, 0.8);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 3; ++trial) {
    const BivariateNormal d{mu1(rng), mu2(rng), sig(rng), sig(rng), rho(rng)};
    std::vector<double> counts(g.size(), 0.0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double z1 = z(rng), z2 = z(rng);
      const double a1 = d.mu1 + d.sigma1 * z1;
      const double a2 = d.mu2 + d.sigma2 * (d.rho * z1 + std::sqrt(1 - d.rho * d.rho) * z2);
      if (auto id = g.nearest_cell(a1, a2)) counts[*id] += 1.0;
    }
    const auto masses = input_cell_masses(single_mode(d), {kOne, kOne}, g);
    for (std::size_t id = 0; id < g.size(); ++id) EXPECT_NEAR(masses[id], counts[id] / n, 4e-3);
  }
}

TEST(InputCellMass, MixesModesAndBetas) {
  ForecastStep s;
  s.modes = {BivariateNormal{0, 0, 1, 0.5, 0}, BivariateNormal{0, 1, 1, 0.5, 0},
             BivariateNormal{0, -1, 1, 0.5, 0.3}};
  s.mode_prob = {0.5, 0.3, 0.2};
  const std::vector<double> betas{0.5, 2.0}, weights{0.25, 0.75};
  const InputGrid g;
  const InputCell c = g.cell(30);
  double expected = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t b = 0; b < 2; ++b) {
      expected += s.mode_prob[m] * weights[b] * cell_mass(scale_confidence(s.modes[m], betas[b]), c);
    }
  }
  EXPECT_NEAR(input_cell_mass(s, {betas, weights}, c), expected, 1e-15);
}

TEST(Normalize, Rules) {
  const std::vector<double> two{0.2, 0.2};
  const auto a = normalize_inputs(two);
  EXPECT_DOUBLE_EQ(a.probs[0], 0.5);
  EXPECT_FALSE(a.degenerate);
  const std::vector<double> one{0.37};
  EXPECT_DOUBLE_EQ(normalize_inputs(one).probs[0], 1.0);
  const std::vector<double> m{0.1, 0.7, 0.05, 0.15};
  std::vector<double> scaled;
  for (double x : m) scaled.push_back(x * 13.0);
  const auto p = normalize_inputs(m), q = normalize_inputs(scaled);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(p.probs[i], q.probs[i], 1e-15);
  const std::vector<double> zero{0, 0, 0};
  const auto z = normalize_inputs(zero);
  EXPECT_TRUE(z.degenerate);
  for (double x : z.probs) EXPECT_DOUBLE_EQ(x, 1.0 / 3);
}
