#include "reachrisk/belief.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "reachrisk/input_mass.hpp"

namespace reachrisk {

void BeliefVector::validate() const {
  if (betas.empty() || betas.size() != probs.size()) {
    throw std::invalid_argument("belief: betas and probabilities must be non-empty and aligned");
  }
  double sum = 0.0;
  for (double b : probs) {
    if (b < 0.0 || b > 1.0) throw std::invalid_argument("belief: probability outside [0, 1]");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("belief: probabilities must sum to one");
  if (window == 0) throw std::invalid_argument("belief: window must be positive");
}

BeliefVector init_uniform(std::vector<double> betas, std::size_t window) {
  if (betas.empty()) throw std::invalid_argument("belief: no betas");
  std::set<double> seen;
  for (double b : betas) {
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("belief: betas must be positive");
    if (!seen.insert(b).second) throw std::invalid_argument("belief: duplicate beta");
  }
  if (window == 0) throw std::invalid_argument("belief: window must be positive");
  BeliefVector out;
  out.probs.assign(betas.size(), 1.0 / static_cast<double>(betas.size()));
  out.betas = std::move(betas);
  out.window = window;
  return out;
}

double observation_likelihood(const ForecastStep& step, const InputGrid& inputs,
                              const InputConstraintConfig& limits, double v1,
                              std::size_t observed_cell, double beta) {
  const State4 state{0.0, 0.0, v1, 0.0};
  const auto admissible = admissible_inputs(inputs, state, limits);
  if (std::find(admissible.begin(), admissible.end(), observed_cell) == admissible.end()) {
    throw std::invalid_argument("observation_likelihood: observed cell is not admissible");
  }
  const double one = 1.0;
  const ConfidenceMixture single{{&beta, 1}, {&one, 1}};
  std::vector<double> masses;
  masses.reserve(admissible.size());
  double observed = 0.0;
  for (std::size_t id : admissible) {
    masses.push_back(input_cell_mass(step, single, inputs.cell(id)));
    if (id == observed_cell) observed = masses.back();
  }
  const auto norm = normalize_inputs(masses);
  if (norm.degenerate) return 1.0 / static_cast<double>(admissible.size());
  double sum = 0.0;
  for (double m : masses) sum += m;
  return observed / sum;
}

BeliefUpdate update_with_likelihoods(const BeliefVector& belief,
                                     std::span<const double> likelihoods) {
  if (likelihoods.size() != belief.size()) {
    throw std::invalid_argument("belief update: likelihood count mismatch");
  }
  BeliefUpdate out{belief, false};
  std::vector<double> post(belief.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    post[i] = belief.probs[i] * likelihoods[i];
    sum += post[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < belief.size(); ++i) out.belief.probs[i] = post[i] / sum;
  return out;
}

BeliefUpdate update(const BeliefVector& belief, std::span<const BeliefEvidence> evidence,
                    const InputGrid& inputs, const InputConstraintConfig& limits) {
  if (evidence.empty()) throw std::invalid_argument("belief update: no observations");
  const std::size_t first = evidence.size() > belief.window ? evidence.size() - belief.window : 0;
  std::vector<double> likelihood(belief.size(), 1.0);
  for (std::size_t e = first; e < evidence.size(); ++e) {
    const BeliefEvidence& ev = evidence[e];
    if (ev.forecast == nullptr || ev.step >= ev.forecast->size()) {
      throw std::invalid_argument("belief update: evidence without a forecast step");
    }
    const double expected = ev.forecast->issued_at + static_cast<double>(ev.step) * ev.forecast->dt;
    if (std::abs(expected - ev.interval_start) > 1e-6) {
      throw std::invalid_argument("belief update: stale forecast for observation");
    }
    for (std::size_t i = 0; i < belief.size(); ++i) {
      likelihood[i] *= observation_likelihood(ev.forecast->steps[ev.step], inputs, limits, ev.v1,
                                              ev.observed_cell, belief.betas[i]);
    }
  }
  return update_with_likelihoods(belief, likelihood);
}

}  // namespace reachrisk
