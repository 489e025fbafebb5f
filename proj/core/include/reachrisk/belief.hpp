#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reachrisk/grid.hpp"
#include "reachrisk/predictor.hpp"

namespace reachrisk {

/// Probabilities over a discrete set of confidence coefficients.
struct BeliefVector {
  std::vector<double> betas;
  std::vector<double> probs;
  std::size_t window = 2;  // k', number of past observations per update

  std::size_t size() const { return betas.size(); }
  /// Throws std::invalid_argument on broken invariants.
  void validate() const;
};

/// Uniform belief. Throws on empty, non-positive or duplicate betas.
BeliefVector init_uniform(std::vector<double> betas, std::size_t window = 2);

namespace beta_presets {
inline const std::vector<double> kSingle = {1.0};
inline const std::vector<double> kThree = {0.5, 1.0, 2.0};
inline const std::vector<double> kFive = {1.0 / 3.0, 0.5, 1.0, 2.0, 3.0};
}  // namespace beta_presets

/// Normalised probability of the observed input cell under the forecast step
/// scaled by beta, over the admissible inputs at v1. Throws if the observed
/// cell is not admissible.
double observation_likelihood(const ForecastStep& step, const InputGrid& inputs,
                              const InputConstraintConfig& limits, double v1,
                              std::size_t observed_cell, double beta);

/// One observed acceleration interval paired with the forecast step that predicted it.
struct BeliefEvidence {
  const AccelerationForecast* forecast = nullptr;
  std::size_t step = 0;          // index into forecast->steps
  double interval_start = 0.0;   // s; must equal issued_at + step * dt
  double v1 = 0.0;               // longitudinal speed at interval start
  std::size_t observed_cell = 0;
};

struct BeliefUpdate {
  BeliefVector belief;
  bool degenerate = false;  // all posteriors vanished; prior kept
};

/// b'(beta) proportional to b(beta) * prod over evidence of the likelihood.
/// Uses at most the last `belief.window` items. Throws on empty or stale evidence.
BeliefUpdate update(const BeliefVector& belief, std::span<const BeliefEvidence> evidence,
                    const InputGrid& inputs, const InputConstraintConfig& limits);

/// Same update from precomputed per-beta likelihood products.
BeliefUpdate update_with_likelihoods(const BeliefVector& belief,
                                     std::span<const double> likelihoods);

}  // namespace reachrisk
