#include "reachrisk/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace reachrisk {

void BivariateNormal::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
    throw std::invalid_argument("bivariate normal: sigmas must be positive");
  }
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("bivariate normal: |rho| must be below 1");
  }
}

double pdf(const BivariateNormal& d, double a1, double a2) {
  const double z1 = (a1 - d.mu1) / d.sigma1;
  const double z2 = (a2 - d.mu2) / d.sigma2;
  const double one_m_r2 = 1.0 - d.rho * d.rho;
  const double q = (z1 * z1 + z2 * z2 - 2.0 * d.rho * z1 * z2) / one_m_r2;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * d.sigma1 * d.sigma2 * std::sqrt(one_m_r2));
}

BivariateNormal scale_confidence(const BivariateNormal& d, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("scale_confidence: beta must be positive");
  }
  BivariateNormal out = d;
  out.sigma1 *= beta;
  out.sigma2 *= beta;
  return out;
}

const char* maneuver_name(Maneuver m) {
  switch (m) {
    case Maneuver::kKeep:
      return "keep";
    case Maneuver::kLeft:
      return "left";
    case Maneuver::kRight:
      return "right";
  }
  return "?";
}

void AccelerationForecast::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("forecast: dt must be positive");
  if (steps.empty()) throw std::invalid_argument("forecast: no steps");
  for (const auto& step : steps) {
    double sum = 0.0;
    for (std::size_t m = 0; m < kManeuverCount; ++m) {
      if (step.mode_prob[m] < 0.0) throw std::invalid_argument("forecast: negative mode probability");
      sum += step.mode_prob[m];
      step.modes[m].validate();
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("forecast: mode probabilities do not sum to one");
    }
  }
}

std::string forecast_to_json(const AccelerationForecast& f) {
  nlohmann::json j;
  j["issued_at"] = f.issued_at;
  j["dt"] = f.dt;
  j["steps"] = nlohmann::json::array();
  for (const auto& step : f.steps) {
    nlohmann::json js;
    for (std::size_t m = 0; m < kManeuverCount; ++m) {
      const auto& d = step.modes[m];
      js[maneuver_name(static_cast<Maneuver>(m))] = {
          {"prob", step.mode_prob[m]}, {"mu1", d.mu1},       {"mu2", d.mu2},
          {"sigma1", d.sigma1},        {"sigma2", d.sigma2}, {"rho", d.rho}};
    }
    j["steps"].push_back(js);
  }
  return j.dump(2);
}

namespace {

void require_history(std::span<const Observation> history) {
  if (history.empty()) {
    throw std::invalid_argument("predictor: history must contain at least one sample");
  }
}

}  // namespace

HeuristicPredictor::HeuristicPredictor(HeuristicParams params, ForecastShape shape)
    : params_(params), shape_(shape) {
  BivariateNormal{0.0, 0.0, params_.sigma1, params_.sigma2, params_.rho}.validate();
  if (params_.dominant_prob < 0.0 || params_.dominant_prob > 1.0) {
    throw std::invalid_argument("heuristic predictor: dominant_prob outside [0, 1]");
  }
}

AccelerationForecast HeuristicPredictor::forecast(std::span<const Observation> history) const {
  require_history(history);
  const Observation& now = history.back();
  const double v2 = now.state.v2;

  Maneuver dominant = Maneuver::kKeep;
  if (std::abs(v2) >= params_.keep_threshold) {
    dominant = v2 > 0.0 ? Maneuver::kLeft : Maneuver::kRight;
  }
  ForecastStep step;
  const double rest = (1.0 - params_.dominant_prob) / 2.0;
  for (std::size_t m = 0; m < kManeuverCount; ++m) {
    step.mode_prob[m] = static_cast<Maneuver>(m) == dominant ? params_.dominant_prob : rest;
  }
  const double lateral[kManeuverCount] = {0.0, params_.lateral_mean, -params_.lateral_mean};
  for (std::size_t m = 0; m < kManeuverCount; ++m) {
    step.modes[m] = {0.0, lateral[m], params_.sigma1, params_.sigma2, params_.rho};
  }

  AccelerationForecast f;
  f.issued_at = now.t;
  f.dt = shape_.dt;
  f.steps.assign(shape_.steps, step);
  return f;
}

GenerativePredictor::GenerativePredictor(std::shared_ptr<const SurroundingModel> model,
                                         GenerativeParams params, ForecastShape shape)
    : model_(std::move(model)), params_(params), shape_(shape) {
  if (!model_) throw std::invalid_argument("generative predictor: no scenario model");
  BivariateNormal{0.0, 0.0, params_.sigma1, params_.sigma2, params_.rho}.validate();
}

AccelerationForecast GenerativePredictor::forecast(std::span<const Observation> history) const {
  require_history(history);
  const Observation& now = history.back();
  const ScenarioConfig& cfg = model_->config();
  const bool started = now.t >= cfg.lc_start - 1e-9;
  const double start = started ? cfg.lc_start : now.t;
  const double sign[kManeuverCount] = {0.0, 1.0, -1.0};
  const auto substeps = std::max<long long>(1, std::llround(shape_.dt / cfg.sim_dt));
  const double h = shape_.dt / static_cast<double>(substeps);

  AccelerationForecast f;
  f.issued_at = now.t;
  f.dt = shape_.dt;
  f.steps.resize(shape_.steps);
  for (std::size_t m = 0; m < kManeuverCount; ++m) {
    PointMassState s = now.state;
    double t = now.t;
    for (std::size_t k = 0; k < shape_.steps; ++k) {
      const PointMassState before = s;
      for (long long j = 0; j < substeps; ++j) {
        s = step_point_mass(s, model_->accel(t, s, sign[m], start), h);
        t += h;
      }
      auto& d = f.steps[k].modes[m];
      d = {(s.v1 - before.v1) / shape_.dt, (s.v2 - before.v2) / shape_.dt, params_.sigma1,
           params_.sigma2, params_.rho};
    }
  }
  for (auto& step : f.steps) {
    if (started) {
      step.mode_prob = {0.0, 1.0, 0.0};
    } else {
      step.mode_prob = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    }
  }
  return f;
}

std::vector<PointMassState> propagate_mean_trajectory(const PointMassState& start,
                                                      const AccelerationForecast& f, Maneuver m) {
  std::vector<PointMassState> out;
  out.reserve(f.size());
  PointMassState s = start;
  for (const auto& step : f.steps) {
    const auto& d = step.modes[static_cast<std::size_t>(m)];
    s = step_point_mass(s, {d.mu1, d.mu2}, f.dt);
    out.push_back(s);
  }
  return out;
}

double propagate_sigma(double sigma, double dt) { return sigma * dt * dt / 2.0; }

double propagate_correlation(double rho, double dt) {
  return std::clamp(rho * dt * dt / 2.0, -0.999, 0.999);
}

}  // namespace reachrisk
