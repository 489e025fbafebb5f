#include "reachrisk/hj.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "reachrisk/parallel.hpp"

namespace reachrisk {

namespace {

constexpr std::size_t kMaxDims = 8;

std::string describe_alpha(std::span<const double> alpha) {
  std::ostringstream os;
  os << "alpha = [";
  for (std::size_t i = 0; i < alpha.size(); ++i) os << (i ? ", " : "") << alpha[i];
  os << "]";
  return os.str();
}

// minmod of neighbouring second differences; zero at extrema keeps the
// correction from creating new ones
double limited(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

}  // namespace

double SeparableTerm::flux(double p_minus, double p_plus) const {
  // h is convex (maximize) or concave (minimize) with its only kink at p = 0.
  const double lo = std::min(p_minus, p_plus), hi = std::max(p_minus, p_plus);
  const double a = (*this)(p_minus), b = (*this)(p_plus);
  const bool spans_zero = lo <= 0.0 && hi >= 0.0;
  if (maximize) {
    if (p_minus <= p_plus) return std::max(a, b);
    return spans_zero ? std::min({a, b, 0.0}) : std::min(a, b);
  }
  if (p_minus <= p_plus) return spans_zero ? std::max({a, b, 0.0}) : std::max(a, b);
  return std::min(a, b);
}

HjResult solve_hj(std::span<const GridAxis> axes, const HjGame& game, std::vector<double> horizons,
                  const HjOptions& opts) {
  const std::size_t dims = axes.size();
  if (dims == 0 || dims > kMaxDims || dims != game.dims()) {
    throw std::invalid_argument("solve_hj: axis count does not match the game");
  }
  if (!(opts.cfl > 0.0 && opts.cfl <= 1.0)) throw std::invalid_argument("solve_hj: cfl must be in (0, 1]");
  if (opts.order != 1 && opts.order != 2) throw std::invalid_argument("solve_hj: order must be 1 or 2");
  for (double h : horizons) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw std::invalid_argument("solve_hj: bad horizon");
  }
  if (horizons.empty()) throw std::invalid_argument("solve_hj: no horizon requested");
  std::sort(horizons.begin(), horizons.end());

  std::array<std::size_t, kMaxDims> count{}, stride{};
  std::size_t total = 1;
  for (std::size_t d = dims; d-- > 0;) {
    if (axes[d].count < 2) throw std::invalid_argument("solve_hj: every axis needs two nodes");
    count[d] = axes[d].count;
    stride[d] = total;
    total *= count[d];
  }

  HjResult out;
  out.horizons = horizons;
  out.alpha = game.dissipation(axes);
  if (out.alpha.size() != dims) throw std::logic_error("solve_hj: dissipation has wrong size");
  double rate = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    if (!(out.alpha[d] >= 0.0) || !std::isfinite(out.alpha[d])) {
      throw std::runtime_error("solve_hj: non-finite dissipation estimate, " + describe_alpha(out.alpha));
    }
    rate += out.alpha[d] / axes[d].step;
  }
  if (!(rate > 0.0)) {
    throw std::runtime_error("solve_hj: zero dissipation, time step undefined, " + describe_alpha(out.alpha));
  }
  out.dt = opts.cfl / rate;

  const std::vector<SeparableTerm> terms = game.separable_terms();
  for (const auto& term : terms) {
    if (term.axis >= dims) throw std::invalid_argument("solve_hj: separable term on a missing axis");
  }

  auto node_index = [&](std::size_t linear, std::array<std::size_t, kMaxDims>& idx) {
    for (std::size_t d = 0; d < dims; ++d) {
      idx[d] = linear / stride[d];
      linear %= stride[d];
    }
  };

  std::vector<double> cur(total), stage(total), rate_buf(total);
  parallel_chunks(total, opts.workers, [&](std::size_t, std::size_t b, std::size_t e) {
    std::array<std::size_t, kMaxDims> idx{};
    std::array<double, kMaxDims> x{};
    for (std::size_t n = b; n < e; ++n) {
      node_index(n, idx);
      for (std::size_t d = 0; d < dims; ++d) x[d] = axes[d].node(idx[d]);
      cur[n] = game.target({x.data(), dims});
    }
  });

  const bool second = opts.order == 2;
  // rate[n] = min(0, numerical Hamiltonian) for the values in `src`
  auto rates = [&](const std::vector<double>& src, std::vector<double>& rate) {
    parallel_chunks(total, opts.workers, [&](std::size_t, std::size_t b, std::size_t e) {
      std::array<std::size_t, kMaxDims> idx{};
      std::array<double, kMaxDims> x{}, p{}, alpha{}, pm{}, pp{};
      for (std::size_t n = b; n < e; ++n) {
        node_index(n, idx);
        const double v = src[n];
        for (std::size_t d = 0; d < dims; ++d) x[d] = axes[d].node(idx[d]);
        if (!game.local_dissipation({x.data(), dims}, {alpha.data(), dims})) {
          std::copy(out.alpha.begin(), out.alpha.end(), alpha.begin());
        }
        double diss = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          const double h = axes[d].step;
          const std::size_t i = idx[d], last = count[d] - 1, s = stride[d];
          auto at = [&](std::ptrdiff_t off) { return src[n + static_cast<std::size_t>(off * static_cast<std::ptrdiff_t>(s))]; };
          double lo, hi;
          // linear extrapolation past the edge: both sides use the inner difference
          if (i == 0) {
            hi = (at(1) - v) / h;
            lo = hi;
          } else if (i == last) {
            lo = (v - at(-1)) / h;
            hi = lo;
          } else {
            lo = (v - at(-1)) / h;
            hi = (at(1) - v) / h;
            if (second) {
              const double c = (at(1) - 2.0 * v + at(-1)) / h;
              const double l = i >= 2 ? (v - 2.0 * at(-1) + at(-2)) / h : c;
              const double r = i + 2 <= last ? (at(2) - 2.0 * at(1) + v) / h : c;
              lo += 0.5 * limited(l, c);
              hi -= 0.5 * limited(c, r);
            }
          }
          pm[d] = lo;
          pp[d] = hi;
          p[d] = 0.5 * (lo + hi);
          diss += alpha[d] * 0.5 * (hi - lo);
        }
        // backward time: the dissipation enters with a positive sign
        double ham = game.coupled_hamiltonian({x.data(), dims}, {p.data(), dims}) + diss;
        for (const auto& term : terms) ham += term.flux(pm[term.axis], pp[term.axis]);
        rate[n] = std::min(0.0, ham);
      }
    });
  };

  auto euler = [&](const std::vector<double>& from, const std::vector<double>& rate, double dt,
                   std::vector<double>& to) {
    for (std::size_t n = 0; n < total; ++n) to[n] = from[n] + dt * rate[n];
  };

  auto advance = [&](double dt) {
    rates(cur, rate_buf);
    if (!second) {
      euler(cur, rate_buf, dt, cur);
      return;
    }
    // Heun: both stages only lower values, so the average never exceeds cur
    euler(cur, rate_buf, dt, stage);
    rates(stage, rate_buf);
    for (std::size_t n = 0; n < total; ++n) {
      const double v2 = stage[n] + dt * rate_buf[n];
      cur[n] = 0.5 * (cur[n] + v2);
    }
  };

  double t = 0.0;
  for (double target_t : horizons) {
    while (t < target_t) {
      const double remaining = target_t - t;
      // avoid a sliver step from rounding
      const double dt = remaining <= out.dt * (1.0 + 1e-9) ? remaining : out.dt;
      advance(dt);
      t = dt == remaining ? target_t : t + dt;
      ++out.iterations;
      if (opts.progress) opts.progress(out.iterations, t);
    }
    out.snapshots.push_back(cur);
  }
  return out;
}

LongitudinalGame::LongitudinalGame(Interval ego_accel, Interval sur_accel, double half_length)
    : ego_(ego_accel), sur_(sur_accel), half_length_(half_length) {
  if (ego_.lo > ego_.hi || sur_.lo > sur_.hi || !(half_length > 0.0)) {
    throw std::invalid_argument("LongitudinalGame: bad input ranges");
  }
}

double LongitudinalGame::target(std::span<const double> x) const {
  return std::abs(x[0]) - half_length_;
}

double LongitudinalGame::hamiltonian(std::span<const double> x, std::span<const double> p) const {
  // max over a_e of -p1 a_e, min over a_s of p1 a_s
  const double ego = std::max(-p[1] * ego_.lo, -p[1] * ego_.hi);
  const double sur = std::min(p[1] * sur_.lo, p[1] * sur_.hi);
  return p[0] * x[1] + ego + sur;
}

std::vector<double> LongitudinalGame::dissipation(std::span<const GridAxis> axes) const {
  const double vmax = std::max(std::abs(axes[1].min), std::abs(axes[1].max));
  const double amax = std::max({std::abs(sur_.lo - ego_.hi), std::abs(sur_.hi - ego_.lo)});
  return {vmax, amax};
}

std::vector<SeparableTerm> LongitudinalGame::separable_terms() const {
  // max_ae(-p a_e) + min_as(p a_s) as one kinked term: slope for p < 0 and p > 0
  const double neg = sur_.hi - ego_.hi;
  const double pos = sur_.lo - ego_.lo;
  if (neg <= pos) return {{1, {neg, pos}, true}};
  return {{1, {pos, neg}, false}};
}

double LongitudinalGame::coupled_hamiltonian(std::span<const double> x, std::span<const double> p) const {
  return p[0] * x[1];
}

bool LongitudinalGame::local_dissipation(std::span<const double> x, std::span<double> alpha) const {
  alpha[0] = std::abs(x[1]);
  alpha[1] = 0.0;
  return true;
}

}  // namespace reachrisk
