#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "reachrisk/dynamics.hpp"
#include "reachrisk/grid.hpp"
#include "reachrisk/hj.hpp"

namespace reachrisk {

/// 5-D grid over (y1, y2, psi, v_ego, v_s), row-major with y1 slowest.
struct BrsGrid {
  std::array<GridAxis, 5> axes;

  static BrsGrid full();  // 101 x 21 x 11 x 21 x 21
  static BrsGrid desk();  // 51 x 11 x 7 x 11 x 11
  std::size_t size() const;
  std::size_t linear(const std::array<std::size_t, 5>& idx) const;
  RelativeState node(const std::array<std::size_t, 5>& idx) const;
};

/// max(|y1| - (L_e + L_s)/2, |y2| - (W_e + W_s)/2); negative inside the collision box.
double target_distance(const RelativeState& x, const VehicleGeometry& ego = {},
                       const VehicleGeometry& sur = {});

/// Fixed slip samples used by the Hamiltonian: `count` points evenly spread over the range.
std::vector<double> slip_samples(Interval slip, std::size_t count = 5);

/// max over ego (a_ego, beta) of min over surrounding (a_s, omega) of q . f(x, u, d).
double hamiltonian(const RelativeState& x, const std::array<double, 5>& q,
                   const GameInputRanges& ranges, const VehicleGeometry& geom,
                   const std::vector<double>& slips);

/// The relative-dynamics collision game in solver form.
class RelativeGame : public HjGame {
 public:
  RelativeGame(GameInputRanges ranges, VehicleGeometry ego = {}, VehicleGeometry sur = {},
               std::size_t slip_count = 5);
  std::size_t dims() const override { return 5; }
  double target(std::span<const double> x) const override;
  double hamiltonian(std::span<const double> x, std::span<const double> p) const override;
  std::vector<double> dissipation(std::span<const GridAxis> axes) const override;
  std::vector<SeparableTerm> separable_terms() const override;
  double coupled_hamiltonian(std::span<const double> x, std::span<const double> p) const override;
  bool local_dissipation(std::span<const double> x, std::span<double> alpha) const override;

  const GameInputRanges& ranges() const { return ranges_; }

 private:
  GameInputRanges ranges_;
  VehicleGeometry ego_;
  VehicleGeometry sur_;
  std::vector<double> slips_;
  std::vector<double> sin_slip_, cos_slip_;
};

struct LookupResult {
  double value = 0.0;
  std::array<std::int8_t, 5> clamp{};  // -1 below the axis, +1 above, 0 inside
  bool clamped() const;
};

/// Cached value function V(-horizon, x).
struct ValueTable {
  BrsGrid grid;
  std::vector<float> values;
  double horizon = 0.0;
  double cfl = 0.0;            // solver metadata, not serialized
  std::size_t iterations = 0;  // solver metadata, not serialized

  /// Multilinear interpolation; out-of-grid coordinates clamp to the nearest face.
  LookupResult lookup(const RelativeState& x) const;
  float at(const std::array<std::size_t, 5>& idx) const { return values[grid.linear(idx)]; }
};

bool is_unsafe(const ValueTable& table, const RelativeState& x);

struct BrsSolveOptions {
  double cfl = 0.5;
  int order = 2;
  std::size_t workers = 1;
  std::function<void(std::size_t, double)> progress;
};

/// Value tables at each requested horizon (ascending).
std::vector<ValueTable> solve_brs(const BrsGrid& grid, const RelativeGame& game,
                                  std::vector<double> horizons, const BrsSolveOptions& opts = {});
ValueTable solve_brs(const BrsGrid& grid, const RelativeGame& game, double horizon,
                     const BrsSolveOptions& opts = {});

/// Binary cache: "BRS1", u32 version, u32 axis count, per axis {f64 min, f64 step,
/// u32 count}, f64 horizon, then little-endian f32 values.
void save_table(const ValueTable& table, const std::filesystem::path& path);
ValueTable load_table(const std::filesystem::path& path);
std::size_t table_file_size(const BrsGrid& grid);

/// Boolean unsafe map on a (y1, y2) position grid.
struct PositionSlice {
  GridAxis y1;
  GridAxis y2;
  std::vector<std::uint8_t> unsafe;  // [i1 * y2.count + i2]
  std::vector<std::uint8_t> scope;   // cells the map speaks for

  bool at(std::size_t i1, std::size_t i2) const { return unsafe[i1 * y2.count + i2] != 0; }
  bool in_scope(std::size_t i1, std::size_t i2) const { return scope[i1 * y2.count + i2] != 0; }
};

/// BRS unsafe cells of the table on its own (y1, y2) nodes at fixed heading and speeds.
PositionSlice brs_slice(const ValueTable& table, double psi, double v_ego, double v_s);

struct FrsUnsafeQuery {
  double v_ego = 30.0;
  double v_s = 28.0;
  double lateral_speed = 0.0;  // added to v_s sin(psi)
  double psi = 0.0;
  double horizon = 2.0;
  Interval a1{-5.0, 3.0};
  Interval a2{-1.5, 1.5};
  VehicleGeometry ego;
  VehicleGeometry sur;
  double lateral_limit = 3.75;  // scope: |y2| <= this, y1 >= 0
  std::size_t time_samples = 2000;
};

/// Positions from which some admissible surrounding input sequence reaches the
/// collision box within the horizon while the ego holds its speed. Each axis
/// is propagated as an interval of the double integrator.
PositionSlice unsafe_region_frs(const GridAxis& y1, const GridAxis& y2, const FrsUnsafeQuery& q);

}  // namespace reachrisk
