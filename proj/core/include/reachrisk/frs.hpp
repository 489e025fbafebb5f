#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "reachrisk/belief.hpp"
#include "reachrisk/dynamics.hpp"
#include "reachrisk/grid.hpp"
#include "reachrisk/input_mass.hpp"
#include "reachrisk/predictor.hpp"

namespace reachrisk {

/// Occupancy probabilities over StateGrid cells at one predicted step. Cells
/// are kept sparse and sorted by linear index.
struct ProbabilityField {
  std::size_t step = 0;
  std::vector<std::uint32_t> cells;
  std::vector<double> probs;
  double oob = 0.0;     // mass outside the grid, including pruned mass
  double pruned = 0.0;  // part of oob dropped below the propagation threshold

  double total() const;  // sum(probs) + oob
  std::size_t active() const { return cells.size(); }
  double at(std::size_t linear) const;

  static ProbabilityField point(const StateGrid& grid, const PointMassState& s);
};

/// Normalised input probabilities for every v1 node: admissibility depends on v1 only.
struct InputDistribution {
  struct Entry {
    std::uint32_t input = 0;
    double prob = 0.0;
  };
  std::vector<std::vector<Entry>> by_v1;  // indexed by v1 node
  bool degenerate = false;                // some v1 node fell back to uniform
};

struct FrsConfig {
  double dt = 0.4;
  double threshold = 1e-9;  // source cells at or below this mass are pruned
  std::size_t workers = 1;
};

/// Stochastic forward-reachable-set propagator on a fixed grid pair.
class FrsEngine {
 public:
  FrsEngine(StateGrid states, InputGrid inputs, InputConstraintConfig limits, FrsConfig cfg);

  const StateGrid& states() const { return states_; }
  const InputGrid& inputs() const { return inputs_; }
  const InputConstraintConfig& limits() const { return limits_; }
  const FrsConfig& config() const { return cfg_; }
  void set_workers(std::size_t w) { cfg_.workers = w; }

  InputDistribution input_distribution(const ForecastStep& step, ConfidenceMixture confidence) const;
  /// Same normalisation from a precomputed per-cell mass vector (indexed by input id).
  InputDistribution input_distribution(std::span<const double> masses) const;

  /// One transition: every source cell above threshold moves its mass along
  /// each admissible input to the nearest successor cell.
  ProbabilityField step(const ProbabilityField& field, const InputDistribution& dist) const;

  /// Fields at steps 1..forecast.size() starting from `initial`.
  std::vector<ProbabilityField> propagate(const ProbabilityField& initial,
                                          const AccelerationForecast& forecast,
                                          const BeliefVector& belief) const;

  /// Successor cell of (source, input), as used by step().
  CellIndex successor(std::size_t source, std::size_t input) const;

 private:
  StateGrid states_;
  InputGrid inputs_;
  InputConstraintConfig limits_;
  FrsConfig cfg_;
  // per-axis successor node tables; -1 marks out of domain
  std::vector<std::int32_t> next_y1_;  // [y1][v1][a1]
  std::vector<std::int32_t> next_v1_;  // [v1][a1]
  std::vector<std::int32_t> next_y2_;  // [y2][v2][a2]
  std::vector<std::int32_t> next_v2_;  // [v2][a2]
};

/// Cells whose position centre lies in the ego footprint inflated by the
/// surrounding vehicle's footprint, across all velocity nodes.
class OccupancySet {
 public:
  OccupancySet() = default;
  OccupancySet(const StateGrid& grid, std::size_t step, double ego_y1, double ego_y2,
               const VehicleGeometry& ego, const VehicleGeometry& sur);

  std::size_t step() const { return step_; }
  bool empty() const { return empty_; }
  bool contains(const StateGrid& grid, std::size_t linear) const;
  bool contains_position(std::size_t i1, std::size_t i2) const;
  std::vector<std::size_t> cells(const StateGrid& grid) const;
  std::size_t size(const StateGrid& grid) const;

 private:
  std::size_t step_ = 0;
  bool empty_ = true;
  std::size_t y1_lo_ = 0, y1_hi_ = 0, y2_lo_ = 0, y2_hi_ = 0;  // inclusive node ranges
};

double occupancy_mass(const StateGrid& grid, const ProbabilityField& field, const OccupancySet& occ);

struct CollisionResult {
  double probability = 0.0;
  std::vector<double> step_sums;
  bool clamped = false;  // some step sum exceeded one
};

/// P = 1 - prod_k (1 - sum_{i in H(k)} p_i(k)).
CollisionResult collision_probability(const StateGrid& grid, std::span<const ProbabilityField> fields,
                                      std::span<const OccupancySet> occupancy);
CollisionResult collision_probability(std::span<const double> step_sums);

/// Mass on the actual position cell and its four axis neighbours, summed over velocities.
double position_accuracy(const StateGrid& grid, const ProbabilityField& field,
                         const PointMassState& actual);

/// Position-marginal CSV (step,y1,y2,probability) keeping entries with p > min_prob.
void write_field_csv(std::ostream& os, const StateGrid& grid, std::span<const ProbabilityField> fields,
                     double min_prob = 0.01);

}  // namespace reachrisk
