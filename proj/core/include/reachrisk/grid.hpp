#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace reachrisk {

/// Uniform axis of cell-centred nodes at min + i*step, i in [0, count).
struct GridAxis {
  double min = 0.0;
  double max = 1.0;
  double step = 1.0;
  std::size_t count = 2;

  GridAxis() = default;
  /// Count is derived as round((max - min) / step) + 1. Throws on step <= 0 or max <= min.
  GridAxis(double min, double max, double step);

  double node(std::size_t i) const { return min + static_cast<double>(i) * step; }

  /// Nearest node, ties toward the lower index. Empty when x is outside
  /// [min - step/2, max + step/2].
  std::optional<std::size_t> nearest(double x) const;
};

using State4 = std::array<double, 4>;  // y1, y2, v1, v2

/// Linear cell index into a StateGrid, or out of domain.
class CellIndex {
 public:
  static constexpr std::size_t kOutOfDomain = static_cast<std::size_t>(-1);

  constexpr CellIndex() = default;
  constexpr explicit CellIndex(std::size_t linear) : linear_(linear) {}
  static constexpr CellIndex out_of_domain() { return CellIndex{}; }

  constexpr bool valid() const { return linear_ != kOutOfDomain; }
  constexpr std::size_t value() const { return linear_; }
  constexpr bool operator==(const CellIndex&) const = default;

 private:
  std::size_t linear_ = kOutOfDomain;
};

/// 4-D surrounding-vehicle state grid: (y1, y2, v1, v2). Linear index is
/// row-major with y1 slowest and v2 fastest.
class StateGrid {
 public:
  StateGrid();  // default axes
  explicit StateGrid(std::array<GridAxis, 4> axes);

  const std::array<GridAxis, 4>& axes() const { return axes_; }
  const GridAxis& axis(std::size_t d) const { return axes_[d]; }
  std::size_t size() const { return size_; }

  std::size_t linear(const std::array<std::size_t, 4>& idx) const;
  std::array<std::size_t, 4> unravel(std::size_t linear) const;
  State4 center(std::size_t linear) const;

  /// Throws std::invalid_argument on non-finite input.
  CellIndex index_of(const State4& state) const;

  std::array<std::size_t, 4> strides() const { return strides_; }

 private:
  std::array<GridAxis, 4> axes_;
  std::array<std::size_t, 4> strides_{};
  std::size_t size_ = 0;
};

struct InputCell {
  std::size_t i1 = 0;  // a1 node
  std::size_t i2 = 0;  // a2 node
  double a1 = 0.0;
  double a2 = 0.0;
  // integration bounds
  double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
};

/// 2-D acceleration input grid (a1 longitudinal, a2 lateral).
class InputGrid {
 public:
  InputGrid();  // default axes
  /// With tail_absorption the outermost cells extend to +-infinity on their outer side.
  InputGrid(GridAxis a1, GridAxis a2, bool tail_absorption = false);

  const GridAxis& a1() const { return a1_; }
  const GridAxis& a2() const { return a2_; }
  bool tail_absorption() const { return tail_absorption_; }
  std::size_t size() const { return a1_.count * a2_.count; }

  /// Cell id = i1 * a2.count + i2.
  InputCell cell(std::size_t id) const;
  std::optional<std::size_t> nearest_cell(double a1, double a2) const;

 private:
  GridAxis a1_;
  GridAxis a2_;
  bool tail_absorption_ = false;
};

struct InputConstraintConfig {
  double a_max = 5.0;        // m/s^2, Euclidean magnitude limit
  double omega_max = 0.15;   // rad/s, steering proxy |a2| <= v1 * omega_max
  double dt = 0.4;           // s, forward-motion check horizon
  double v1_min = 20.0;      // m/s, forward-motion floor (v1 axis min)
};

bool is_admissible(const InputCell& cell, double v1, const InputConstraintConfig& limits);

/// Admissible input cell ids for a state, ascending.
std::vector<std::size_t> admissible_inputs(const InputGrid& grid, const State4& state,
                                           const InputConstraintConfig& limits);

/// Throws std::invalid_argument if some in-domain v1 node admits no input.
void validate_constraints(const StateGrid& states, const InputGrid& inputs,
                          const InputConstraintConfig& limits);

}  // namespace reachrisk
