#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reachrisk/grid.hpp"
#include "reachrisk/predictor.hpp"

namespace reachrisk {

/// P(lo <= X <= hi) for X ~ N(mu, sigma^2); bounds may be infinite. Keeps
/// relative precision in the tails.
double normal_interval_mass(double lo, double hi, double mu, double sigma);

/// Probability mass of an input cell under one bivariate normal. The a1 axis
/// is integrated with composite 8-point Gauss-Legendre in probability space,
/// the a2 axis exactly through the conditional normal CDF.
double cell_mass(const BivariateNormal& d, const InputCell& cell, std::size_t panels = 4);

/// Weighted confidence levels: sum_beta weight(beta) * N(mu, (beta sigma)^2).
struct ConfidenceMixture {
  std::span<const double> betas;
  std::span<const double> weights;
};

/// Unnormalised cell mass: sum over maneuvers and confidence levels of
/// lambda_m * b(beta) * cell integral of the beta-scaled density.
double input_cell_mass(const ForecastStep& step, ConfidenceMixture confidence,
                       const InputCell& cell);

/// Masses of every input cell of the grid, indexed by cell id.
std::vector<double> input_cell_masses(const ForecastStep& step, ConfidenceMixture confidence,
                                      const InputGrid& grid);

struct NormalizeResult {
  std::vector<double> probs;
  bool degenerate = false;  // all masses were zero; uniform fallback used
};

/// p_u = m_u / sum(m). Falls back to uniform when every mass is zero.
NormalizeResult normalize_inputs(std::span<const double> masses);

}  // namespace reachrisk
