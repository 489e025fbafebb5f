#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "reachrisk/dynamics.hpp"
#include "reachrisk/grid.hpp"

namespace reachrisk {

/// Hamiltonian term ext_{c in range} c * p_axis, with ext = max or min.
/// Such terms get an exact Godunov flux instead of Lax-Friedrichs.
struct SeparableTerm {
  std::size_t axis = 0;
  Interval range;
  bool maximize = true;

  double operator()(double p) const {
    const double a = range.lo * p, b = range.hi * p;
    return maximize ? std::max(a, b) : std::min(a, b);
  }
  /// Godunov flux from the one-sided derivatives at a node.
  double flux(double p_minus, double p_plus) const;
};

/// A differential game on a uniform grid, for the reach-avoid solver below.
class HjGame {
 public:
  virtual ~HjGame() = default;
  virtual std::size_t dims() const = 0;
  /// Signed distance to the target set; negative inside.
  virtual double target(std::span<const double> x) const = 0;
  /// Optimized Hamiltonian at state x and costate p.
  virtual double hamiltonian(std::span<const double> x, std::span<const double> p) const = 0;
  /// Upper bound on |dH/dp_i| over the grid, per axis. Sets the time step.
  virtual std::vector<double> dissipation(std::span<const GridAxis> axes) const = 0;
  /// Terms of the Hamiltonian that depend on one costate only.
  virtual std::vector<SeparableTerm> separable_terms() const { return {}; }
  /// H minus the separable terms.
  virtual double coupled_hamiltonian(std::span<const double> x, std::span<const double> p) const {
    return hamiltonian(x, p);
  }
  /// Bound on |dH_coupled/dp_i| at one node (local Lax-Friedrichs). Must not
  /// exceed the global bound. Returns false to use the global bound instead.
  virtual bool local_dissipation(std::span<const double> x, std::span<double> alpha) const {
    (void)x;
    (void)alpha;
    return false;
  }
};

struct HjOptions {
  double cfl = 0.5;
  int order = 2;  // 1: one-sided differences + Euler; 2: minmod-limited second-order differences + Heun
  std::size_t workers = 1;
  /// Called after every time step with (steps done, time reached).
  std::function<void(std::size_t, double)> progress;
};

struct HjResult {
  std::vector<std::vector<double>> snapshots;  // one per requested horizon, ascending
  std::vector<double> horizons;
  std::vector<double> alpha;
  double dt = 0.0;  // nominal step; the last step before each snapshot may be shorter
  std::size_t iterations = 0;
};

/// Integrates V_t + min(0, H(x, grad V)) = 0 backward from V(0) = target with
/// Lax-Friedrichs fluxes:
///   V <- V + dt * min(0, Hc(x, (p+ + p-)/2) + sum_i alpha_i (p+_i - p-_i)/2 + sum_j S_j)
/// One-sided gradients with Euler steps at order 1, minmod-limited gradients with
/// Heun steps at order 2. Boundary nodes extrapolate linearly.
/// where Hc is the coupled Hamiltonian, alpha_i is taken per node when the
/// game provides it, and S_j are Godunov fluxes of the separable terms. Values are
/// stored row-major with the first axis slowest. Horizons must be
/// non-negative; they are sorted and each is landed on exactly.
HjResult solve_hj(std::span<const GridAxis> axes, const HjGame& game, std::vector<double> horizons,
                  const HjOptions& opts = {});

/// Longitudinal-only pursuit: state (gap, closing-rate v = v_s - v_e), with
/// gap' = v and v' = a_s - a_e. The ego maximizes, the surrounding minimizes.
class LongitudinalGame : public HjGame {
 public:
  LongitudinalGame(Interval ego_accel, Interval sur_accel, double half_length);
  std::size_t dims() const override { return 2; }
  double target(std::span<const double> x) const override;
  double hamiltonian(std::span<const double> x, std::span<const double> p) const override;
  std::vector<double> dissipation(std::span<const GridAxis> axes) const override;
  std::vector<SeparableTerm> separable_terms() const override;
  double coupled_hamiltonian(std::span<const double> x, std::span<const double> p) const override;
  bool local_dissipation(std::span<const double> x, std::span<double> alpha) const override;

 private:
  Interval ego_;
  Interval sur_;
  double half_length_;
};

}  // namespace reachrisk
