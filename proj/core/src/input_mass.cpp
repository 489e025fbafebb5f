#include "reachrisk/input_mass.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace reachrisk {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// lower tail Phi(z) and upper tail Q(z) = Phi(-z)
double lower_tail(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double upper_tail(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double standard_interval(double zlo, double zhi) {
  if (!(zhi > zlo)) return 0.0;
  if (zlo >= 0.0) return upper_tail(zlo) - upper_tail(zhi);
  if (zhi <= 0.0) return lower_tail(zhi) - lower_tail(zlo);
  return 1.0 - upper_tail(zhi) - lower_tail(zlo);
}

// Gauss-Legendre, 8 points on [-1, 1]
constexpr std::array<double, 8> kNodes = {
    -0.96028985649753623168, -0.79666647741362673959, -0.52553240991632898582,
    -0.18343464249564980494, 0.18343464249564980494,  0.52553240991632898582,
    0.79666647741362673959,  0.96028985649753623168};
constexpr std::array<double, 8> kWeights = {
    0.10122853629037625915, 0.22238103445337447054, 0.31370664314972168789,
    0.36268378051223664779, 0.36268378051223664779, 0.31370664314972168789,
    0.22238103445337447054, 0.10122853629037625915};

// Integrates one side of the a1 marginal, parametrised by its tail
// probability u in (0, 1/2] so narrow tail cells keep their precision.
double tail_part(const BivariateNormal& d, const InputCell& cell, double z1lo, double z1hi,
                 bool upper, std::size_t panels) {
  const double ulo = upper ? upper_tail(z1hi) : lower_tail(z1lo);
  const double uhi = upper ? upper_tail(z1lo) : lower_tail(z1hi);
  if (!(uhi > ulo)) return 0.0;

  const double cond_sigma = d.sigma2 * std::sqrt(1.0 - d.rho * d.rho);
  auto conditional = [&](double u) {
    // upper tail: z1 = sqrt2 erfc_inv(2u); lower tail mirrors it
    double z1 = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
    if (!upper) z1 = -z1;
    const double mean = d.mu2 + d.rho * d.sigma2 * z1;
    return normal_interval_mass(cell.lo2, cell.hi2, mean, cond_sigma);
  };

  const double width = (uhi - ulo) / static_cast<double>(panels);
  const double half = 0.5 * width;
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = ulo + (static_cast<double>(p) + 0.5) * width;
    double panel = 0.0;
    for (std::size_t k = 0; k < kNodes.size(); ++k) {
      panel += kWeights[k] * conditional(mid + half * kNodes[k]);
    }
    total += half * panel;
  }
  return total;
}

}  // namespace

double normal_interval_mass(double lo, double hi, double mu, double sigma) {
  return standard_interval((lo - mu) / sigma, (hi - mu) / sigma);
}

double cell_mass(const BivariateNormal& d, const InputCell& cell, std::size_t panels) {
  const double z1lo = (cell.lo1 - d.mu1) / d.sigma1;
  const double z1hi = (cell.hi1 - d.mu1) / d.sigma1;
  if (d.rho == 0.0) {
    return standard_interval(z1lo, z1hi) * normal_interval_mass(cell.lo2, cell.hi2, d.mu2, d.sigma2);
  }
  if (!(z1hi > z1lo)) return 0.0;
  if (z1lo < 0.0 && z1hi > 0.0) {
    return tail_part(d, cell, z1lo, 0.0, false, panels) + tail_part(d, cell, 0.0, z1hi, true, panels);
  }
  return tail_part(d, cell, z1lo, z1hi, z1lo >= 0.0, panels);
}

double input_cell_mass(const ForecastStep& step, ConfidenceMixture confidence,
                       const InputCell& cell) {
  if (confidence.betas.size() != confidence.weights.size()) {
    throw std::invalid_argument("input_cell_mass: betas and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t m = 0; m < kManeuverCount; ++m) {
    const double lambda = step.mode_prob[m];
    if (lambda == 0.0) continue;
    double mode_mass = 0.0;
    for (std::size_t b = 0; b < confidence.betas.size(); ++b) {
      if (confidence.weights[b] == 0.0) continue;
      mode_mass +=
          confidence.weights[b] * cell_mass(scale_confidence(step.modes[m], confidence.betas[b]), cell);
    }
    total += lambda * mode_mass;
  }
  return total;
}

std::vector<double> input_cell_masses(const ForecastStep& step, ConfidenceMixture confidence,
                                      const InputGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t id = 0; id < grid.size(); ++id) {
    out[id] = input_cell_mass(step, confidence, grid.cell(id));
  }
  return out;
}

NormalizeResult normalize_inputs(std::span<const double> masses) {
  if (masses.empty()) throw std::invalid_argument("normalize_inputs: no admissible inputs");
  NormalizeResult out;
  double sum = 0.0;
  for (double m : masses) {
    if (m < 0.0) throw std::invalid_argument("normalize_inputs: negative mass");
    sum += m;
  }
  out.probs.resize(masses.size());
  if (!(sum > 0.0)) {
    out.degenerate = true;
    std::fill(out.probs.begin(), out.probs.end(), 1.0 / static_cast<double>(masses.size()));
    return out;
  }
  for (std::size_t i = 0; i < masses.size(); ++i) out.probs[i] = masses[i] / sum;
  return out;
}

}  // namespace reachrisk
