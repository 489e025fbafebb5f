#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reachrisk/dynamics.hpp"
#include "reachrisk/scenario.hpp"

namespace reachrisk {

struct BivariateNormal {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double rho = 0.0;

  /// Throws std::invalid_argument unless sigma > 0 and |rho| < 1.
  void validate() const;
};

double pdf(const BivariateNormal& d, double a1, double a2);

/// Scales both standard deviations by beta. Throws if beta <= 0.
BivariateNormal scale_confidence(const BivariateNormal& d, double beta);

enum class Maneuver : std::size_t { kKeep = 0, kLeft = 1, kRight = 2 };
inline constexpr std::size_t kManeuverCount = 3;
const char* maneuver_name(Maneuver m);

struct ForecastStep {
  std::array<BivariateNormal, kManeuverCount> modes;
  std::array<double, kManeuverCount> mode_prob{1.0 / 3, 1.0 / 3, 1.0 / 3};
};

/// Per-step, per-maneuver acceleration distributions for the next `steps()` intervals of dt.
struct AccelerationForecast {
  double issued_at = 0.0;  // s
  double dt = 0.4;         // s
  std::vector<ForecastStep> steps;

  std::size_t size() const { return steps.size(); }
  /// Throws std::invalid_argument on broken invariants (mode probabilities, sigmas).
  void validate() const;
};

std::string forecast_to_json(const AccelerationForecast& f);

/// One observed sample of the tracked vehicle.
struct Observation {
  double t = 0.0;
  PointMassState state;
  Accel2 accel;
};

/// The replaceable prediction model: observed history (oldest first, last
/// element is the current sample) to an acceleration forecast.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual AccelerationForecast forecast(std::span<const Observation> history) const = 0;
  virtual std::string name() const = 0;
};

struct ForecastShape {
  std::size_t steps = 5;
  double dt = 0.4;
};

struct HeuristicParams {
  double keep_threshold = 0.2;   // |v2| below which lane keeping dominates, m/s
  double dominant_prob = 0.9;
  double lateral_mean = 0.5;     // m/s^2, sign follows the maneuver
  double sigma1 = 1.5;
  double sigma2 = 0.5;
  double rho = 0.0;
};

/// Rule-based baseline with fixed distributions.
class HeuristicPredictor final : public Predictor {
 public:
  HeuristicPredictor(HeuristicParams params, ForecastShape shape);
  AccelerationForecast forecast(std::span<const Observation> history) const override;
  std::string name() const override { return "heuristic"; }

 private:
  HeuristicParams params_;
  ForecastShape shape_;
};

struct GenerativeParams {
  double sigma1 = 0.5;
  double sigma2 = 0.3;
  double rho = 0.0;
};

/// Rolls out the scenario's own behaviour model to produce mean accelerations.
class GenerativePredictor final : public Predictor {
 public:
  /// Throws std::invalid_argument when model is null.
  GenerativePredictor(std::shared_ptr<const SurroundingModel> model, GenerativeParams params,
                      ForecastShape shape);
  AccelerationForecast forecast(std::span<const Observation> history) const override;
  std::string name() const override { return "generative"; }

 private:
  std::shared_ptr<const SurroundingModel> model_;
  GenerativeParams params_;
  ForecastShape shape_;
};

/// Mean trajectory of one maneuver: states at steps 1..e.
std::vector<PointMassState> propagate_mean_trajectory(const PointMassState& start,
                                                      const AccelerationForecast& f, Maneuver m);

/// Position standard deviation from an acceleration one: sigma * dt^2 / 2.
double propagate_sigma(double sigma, double dt);
/// Correlation propagated as rho * dt^2 / 2, clamped to |rho| <= 0.999.
double propagate_correlation(double rho, double dt);

}  // namespace reachrisk
