#include "reachrisk/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace reachrisk {

GridAxis::GridAxis(double min_, double max_, double step_) : min(min_), max(max_), step(step_) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("grid axis step must be positive");
  }
  if (!(max > min)) {
    throw std::invalid_argument("grid axis max must exceed min");
  }
  count = static_cast<std::size_t>(std::llround((max - min) / step)) + 1;
}

std::optional<std::size_t> GridAxis::nearest(double x) const {
  const double half = 0.5 * step;
  if (x < min - half || x > node(count - 1) + half) {
    return std::nullopt;
  }
  // ceil(u - 0.5) picks the lower node on exact ties
  const double u = (x - min) / step;
  auto i = static_cast<long long>(std::ceil(u - 0.5));
  if (i < 0) i = 0;
  if (i >= static_cast<long long>(count)) i = static_cast<long long>(count) - 1;
  return static_cast<std::size_t>(i);
}

namespace {

std::array<GridAxis, 4> default_state_axes() {
  return {GridAxis(-4.0, 80.0, 2.0), GridAxis(-4.0, 4.0, 1.0), GridAxis(20.0, 40.0, 0.4),
          GridAxis(-2.5, 2.5, 0.2)};
}

}  // namespace

StateGrid::StateGrid() : StateGrid(default_state_axes()) {}

StateGrid::StateGrid(std::array<GridAxis, 4> axes) : axes_(axes) {
  strides_[3] = 1;
  for (int d = 2; d >= 0; --d) {
    strides_[d] = strides_[d + 1] * axes_[d + 1].count;
  }
  size_ = strides_[0] * axes_[0].count;
}

std::size_t StateGrid::linear(const std::array<std::size_t, 4>& idx) const {
  std::size_t out = 0;
  for (std::size_t d = 0; d < 4; ++d) {
    out += idx[d] * strides_[d];
  }
  return out;
}

std::array<std::size_t, 4> StateGrid::unravel(std::size_t linear) const {
  std::array<std::size_t, 4> idx{};
  for (std::size_t d = 0; d < 4; ++d) {
    idx[d] = linear / strides_[d];
    linear -= idx[d] * strides_[d];
  }
  return idx;
}

State4 StateGrid::center(std::size_t linear) const {
  const auto idx = unravel(linear);
  State4 x{};
  for (std::size_t d = 0; d < 4; ++d) {
    x[d] = axes_[d].node(idx[d]);
  }
  return x;
}

CellIndex StateGrid::index_of(const State4& state) const {
  std::array<std::size_t, 4> idx{};
  for (std::size_t d = 0; d < 4; ++d) {
    if (!std::isfinite(state[d])) {
      throw std::invalid_argument("index_of: non-finite state component " + std::to_string(d));
    }
    const auto i = axes_[d].nearest(state[d]);
    if (!i) return CellIndex::out_of_domain();
    idx[d] = *i;
  }
  return CellIndex(linear(idx));
}

InputGrid::InputGrid() : InputGrid(GridAxis(-5.0, 3.0, 1.0), GridAxis(-1.5, 1.5, 0.5)) {}

InputGrid::InputGrid(GridAxis a1, GridAxis a2, bool tail_absorption)
    : a1_(a1), a2_(a2), tail_absorption_(tail_absorption) {}

InputCell InputGrid::cell(std::size_t id) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  InputCell c;
  c.i1 = id / a2_.count;
  c.i2 = id % a2_.count;
  c.a1 = a1_.node(c.i1);
  c.a2 = a2_.node(c.i2);
  c.lo1 = c.a1 - 0.5 * a1_.step;
  c.hi1 = c.a1 + 0.5 * a1_.step;
  c.lo2 = c.a2 - 0.5 * a2_.step;
  c.hi2 = c.a2 + 0.5 * a2_.step;
  if (tail_absorption_) {
    if (c.i1 == 0) c.lo1 = -inf;
    if (c.i1 + 1 == a1_.count) c.hi1 = inf;
    if (c.i2 == 0) c.lo2 = -inf;
    if (c.i2 + 1 == a2_.count) c.hi2 = inf;
  }
  return c;
}

std::optional<std::size_t> InputGrid::nearest_cell(double a1, double a2) const {
  const auto i1 = a1_.nearest(a1);
  const auto i2 = a2_.nearest(a2);
  if (!i1 || !i2) return std::nullopt;
  return *i1 * a2_.count + *i2;
}

bool is_admissible(const InputCell& cell, double v1, const InputConstraintConfig& limits) {
  // small slack so nodes sitting exactly on a limit are kept
  constexpr double eps = 1e-12;
  if (std::hypot(cell.a1, cell.a2) > limits.a_max + eps) return false;
  if (v1 + cell.a1 * limits.dt < limits.v1_min - eps) return false;
  if (std::abs(cell.a2) > v1 * limits.omega_max + eps) return false;
  return true;
}

std::vector<std::size_t> admissible_inputs(const InputGrid& grid, const State4& state,
                                           const InputConstraintConfig& limits) {
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < grid.size(); ++id) {
    if (is_admissible(grid.cell(id), state[2], limits)) out.push_back(id);
  }
  return out;
}

void validate_constraints(const StateGrid& states, const InputGrid& inputs,
                          const InputConstraintConfig& limits) {
  const GridAxis& v1 = states.axis(2);
  for (std::size_t i = 0; i < v1.count; ++i) {
    const State4 x{0.0, 0.0, v1.node(i), 0.0};
    if (admissible_inputs(inputs, x, limits).empty()) {
      throw std::invalid_argument("input constraints leave no admissible input at v1 = " +
                                  std::to_string(v1.node(i)));
    }
  }
}

}  // namespace reachrisk
