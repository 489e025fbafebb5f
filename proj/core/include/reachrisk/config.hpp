#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "reachrisk/brs.hpp"
#include "reachrisk/framework.hpp"
#include "reachrisk/frs.hpp"
#include "reachrisk/grid.hpp"
#include "reachrisk/predictor.hpp"
#include "reachrisk/scenario.hpp"

namespace reachrisk {

inline constexpr int kConfigVersion = 1;

struct AxisSpec {
  double min = 0.0;
  double max = 1.0;
  double step = 1.0;
  GridAxis axis() const { return GridAxis(min, max, step); }
};

struct FrsSection {
  std::array<AxisSpec, 4> state{{{-4.0, 80.0, 2.0}, {-4.0, 4.0, 1.0}, {20.0, 40.0, 0.4}, {-2.5, 2.5, 0.2}}};
  AxisSpec a1{-5.0, 3.0, 1.0};
  AxisSpec a2{-1.5, 1.5, 0.5};
  bool tail_absorption = false;
  double a_max = 5.0;
  double omega_max = 0.15;
  double v1_min = 20.0;
  double dt = 0.4;
  double threshold = 1e-9;
  std::size_t steps = 5;
};

struct BrsSection {
  std::string grid = "desk";        // desk | full | custom
  std::array<AxisSpec, 5> axes{};   // used when grid == custom; psi in degrees
  double horizon = 2.0;
  double cfl = 0.5;
  int order = 2;
  std::size_t slip_samples = 5;
  PointMassRanges input_box;
  std::string table = "brs.bin";
};

struct PredictorSection {
  std::string variant = "PSRS-5beta";
  std::size_t window = 2;  // k'
  HeuristicParams heuristic;
  GenerativeParams generative;
};

struct FrameworkSection {
  double threshold = 0.05;
  double tick = 0.4;
  double warmup = 2.0;
  double history = 2.0;
  bool far_face_safe = true;
  bool escalate_on_clamp = true;
};

struct SweepSection {
  SweepRange ego{20.0, 35.0, 1.0};
  SweepRange sur{20.0, 35.0, 1.0};
  std::vector<double> thresholds{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  std::vector<std::string> variants{"HSRS", "PSRS", "PSRS-3beta", "PSRS-5beta"};
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double observation_noise = 0.0;  // std of noise on observed accelerations, m/s^2
  FrsSection frs;
  BrsSection brs;
  PredictorSection predictor;
  FrameworkSection framework;
  ScenarioConfig scenario;
  SweepSection sweep;
  std::string output_dir = "out";

  /// Throws std::invalid_argument with the offending key.
  void validate() const;
};

/// Parses JSON text over the defaults. Unknown keys, wrong types and newer
/// versions are rejected with std::invalid_argument.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Full configuration with every default filled in.
std::string dump_config(const RunConfig& cfg);

StateGrid make_state_grid(const RunConfig& cfg);
InputGrid make_input_grid(const RunConfig& cfg);
InputConstraintConfig make_limits(const RunConfig& cfg);
std::shared_ptr<FrsEngine> make_engine(const RunConfig& cfg);
BrsGrid make_brs_grid(const RunConfig& cfg);
RelativeGame make_game(const RunConfig& cfg);
FrameworkConfig make_framework_config(const RunConfig& cfg);
Variant config_variant(const RunConfig& cfg);
/// Predictor for a variant; the generative one rolls out `scenario`.
std::unique_ptr<Predictor> make_predictor(const RunConfig& cfg, Variant v, const ScenarioConfig& scenario);

}  // namespace reachrisk
