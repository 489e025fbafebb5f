#include "reachrisk/brs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace reachrisk {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

BrsGrid BrsGrid::full() {
  return {{GridAxis(-10.0, 40.0, 0.5), GridAxis(-4.0, 4.0, 0.4), GridAxis(-45.0 * kDeg, 45.0 * kDeg, 9.0 * kDeg),
           GridAxis(20.0, 40.0, 1.0), GridAxis(20.0, 40.0, 1.0)}};
}

BrsGrid BrsGrid::desk() {
  return {{GridAxis(-10.0, 40.0, 1.0), GridAxis(-4.0, 4.0, 0.8), GridAxis(-45.0 * kDeg, 45.0 * kDeg, 15.0 * kDeg),
           GridAxis(20.0, 40.0, 2.0), GridAxis(20.0, 40.0, 2.0)}};
}

std::size_t BrsGrid::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.count;
  return n;
}

std::size_t BrsGrid::linear(const std::array<std::size_t, 5>& idx) const {
  std::size_t n = 0;
  for (std::size_t d = 0; d < 5; ++d) n = n * axes[d].count + idx[d];
  return n;
}

RelativeState BrsGrid::node(const std::array<std::size_t, 5>& idx) const {
  return {axes[0].node(idx[0]), axes[1].node(idx[1]), axes[2].node(idx[2]), axes[3].node(idx[3]),
          axes[4].node(idx[4])};
}

double target_distance(const RelativeState& x, const VehicleGeometry& ego, const VehicleGeometry& sur) {
  return std::max(std::abs(x.y1) - 0.5 * (ego.length + sur.length),
                  std::abs(x.y2) - 0.5 * (ego.width + sur.width));
}

std::vector<double> slip_samples(Interval slip, std::size_t count) {
  if (count == 0) throw std::invalid_argument("slip_samples: need at least one sample");
  if (count == 1) return {0.5 * (slip.lo + slip.hi)};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = slip.lo + (slip.hi - slip.lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  // keep the sample set exactly symmetric for symmetric ranges
  if (slip.lo == -slip.hi) {
    for (std::size_t i = 0; i < count / 2; ++i) out[i] = -out[count - 1 - i];
    if (count % 2 == 1) out[count / 2] = 0.0;
  }
  return out;
}

double hamiltonian(const RelativeState& x, const std::array<double, 5>& q, const GameInputRanges& r,
                   const VehicleGeometry& geom, const std::vector<double>& slips) {
  double best = -INFINITY;
  for (double beta : slips) {
    const double yaw = x.v_ego / geom.l_r * std::sin(beta);
    const double term = q[0] * (yaw * x.y2 - x.v_ego * std::cos(beta)) +
                        q[1] * (-yaw * x.y1 - x.v_ego * std::sin(beta)) - q[2] * yaw;
    best = std::max(best, term);
  }
  const double drift = q[0] * x.v_s * std::cos(x.psi) + q[1] * x.v_s * std::sin(x.psi);
  const double ego_accel = std::max(q[3] * r.ego_accel.lo, q[3] * r.ego_accel.hi);
  const double sur_accel = std::min(q[4] * r.sur_accel.lo, q[4] * r.sur_accel.hi);
  const double sur_omega = std::min(q[2] * r.sur_omega.lo, q[2] * r.sur_omega.hi);
  return best + drift + ego_accel + sur_accel + sur_omega;
}

RelativeGame::RelativeGame(GameInputRanges ranges, VehicleGeometry ego, VehicleGeometry sur,
                           std::size_t slip_count)
    : ranges_(ranges), ego_(ego), sur_(sur), slips_(slip_samples(ranges.ego_slip, slip_count)) {
  for (double b : slips_) {
    sin_slip_.push_back(std::sin(b));
    cos_slip_.push_back(std::cos(b));
  }
}

double RelativeGame::target(std::span<const double> x) const {
  return target_distance({x[0], x[1], x[2], x[3], x[4]}, ego_, sur_);
}

double RelativeGame::hamiltonian(std::span<const double> x, std::span<const double> p) const {
  return reachrisk::hamiltonian({x[0], x[1], x[2], x[3], x[4]}, {p[0], p[1], p[2], p[3], p[4]}, ranges_,
                                ego_, slips_);
}

std::vector<double> RelativeGame::dissipation(std::span<const GridAxis> axes) const {
  // |f_i| maximised over the axis extremes and all sampled inputs; f is
  // monotone in each of y1, y2, v_ego, v_s, and the heading extreme is
  // covered by the psi endpoints and zero.
  std::vector<double> alpha(5, 0.0);
  const double psis[] = {axes[2].min, axes[2].max, 0.0};
  const double omegas[] = {ranges_.sur_omega.lo, ranges_.sur_omega.hi};
  const double eacc[] = {ranges_.ego_accel.lo, ranges_.ego_accel.hi};
  const double sacc[] = {ranges_.sur_accel.lo, ranges_.sur_accel.hi};
  for (double y1 : {axes[0].min, axes[0].max})
    for (double y2 : {axes[1].min, axes[1].max})
      for (double psi : psis)
        for (double ve : {axes[3].min, axes[3].max})
          for (double vs : {axes[4].min, axes[4].max})
            for (double beta : slips_)
              for (double om : omegas)
                for (std::size_t a = 0; a < 2; ++a) {
                  const auto f = relative_deriv({y1, y2, psi, ve, vs}, {eacc[a], beta}, {sacc[a], om}, ego_);
                  for (std::size_t d = 0; d < 5; ++d) alpha[d] = std::max(alpha[d], std::abs(f[d]));
                }
  return alpha;
}

std::vector<SeparableTerm> RelativeGame::separable_terms() const {
  return {{2, ranges_.sur_omega, false}, {3, ranges_.ego_accel, true}, {4, ranges_.sur_accel, false}};
}

double RelativeGame::coupled_hamiltonian(std::span<const double> x, std::span<const double> p) const {
  double best = -INFINITY;
  for (std::size_t k = 0; k < slips_.size(); ++k) {
    const double yaw = x[3] / ego_.l_r * sin_slip_[k];
    const double term = p[0] * (yaw * x[1] - x[3] * cos_slip_[k]) +
                        p[1] * (-yaw * x[0] - x[3] * sin_slip_[k]) - p[2] * yaw;
    best = std::max(best, term);
  }
  return best + p[0] * x[4] * std::cos(x[2]) + p[1] * x[4] * std::sin(x[2]);
}

bool RelativeGame::local_dissipation(std::span<const double> x, std::span<double> alpha) const {
  const double y1 = x[0], y2 = x[1], ve = x[3], vs = x[4];
  const double drift1 = vs * std::cos(x[2]);
  const double drift2 = vs * std::sin(x[2]);
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (std::size_t k = 0; k < slips_.size(); ++k) {
    const double yaw = ve / ego_.l_r * sin_slip_[k];
    a1 = std::max(a1, std::abs(yaw * y2 + drift1 - ve * cos_slip_[k]));
    a2 = std::max(a2, std::abs(-yaw * y1 + drift2 - ve * sin_slip_[k]));
    a3 = std::max(a3, std::abs(yaw));
  }
  // accelerations and turn rate are handled by the separable fluxes
  alpha[0] = a1;
  alpha[1] = a2;
  alpha[2] = a3;
  alpha[3] = 0.0;
  alpha[4] = 0.0;
  return true;
}

bool LookupResult::clamped() const {
  return std::any_of(clamp.begin(), clamp.end(), [](std::int8_t c) { return c != 0; });
}

LookupResult ValueTable::lookup(const RelativeState& x) const {
  LookupResult out;
  const std::array<double, 5> q{x.y1, x.y2, wrap_angle(x.psi), x.v_ego, x.v_s};
  std::array<std::size_t, 5> base{};
  std::array<double, 5> w{};
  for (std::size_t d = 0; d < 5; ++d) {
    const GridAxis& a = grid.axes[d];
    double u = (q[d] - a.min) / a.step;
    const double top = static_cast<double>(a.count - 1);
    if (!(u >= 0.0)) {
      if (u < 0.0) out.clamp[d] = -1;
      u = 0.0;
    } else if (u > top) {
      out.clamp[d] = 1;
      u = top;
    }
    std::size_t i = static_cast<std::size_t>(std::floor(u));
    if (i >= a.count - 1) i = a.count - 2;
    base[d] = i;
    w[d] = u - static_cast<double>(i);
  }
  double v = 0.0;
  for (std::size_t corner = 0; corner < 32; ++corner) {
    double weight = 1.0;
    std::array<std::size_t, 5> idx = base;
    for (std::size_t d = 0; d < 5; ++d) {
      if (corner & (1u << d)) {
        weight *= w[d];
        ++idx[d];
      } else {
        weight *= 1.0 - w[d];
      }
    }
    if (weight != 0.0) v += weight * static_cast<double>(at(idx));
  }
  out.value = v;
  return out;
}

bool is_unsafe(const ValueTable& table, const RelativeState& x) { return table.lookup(x).value <= 0.0; }

std::vector<ValueTable> solve_brs(const BrsGrid& grid, const RelativeGame& game, std::vector<double> horizons,
                                  const BrsSolveOptions& opts) {
  HjOptions hj{opts.cfl, opts.order, opts.workers, opts.progress};
  const HjResult res = solve_hj(grid.axes, game, std::move(horizons), hj);
  std::vector<ValueTable> out;
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    ValueTable t;
    t.grid = grid;
    t.horizon = res.horizons[k];
    t.cfl = opts.cfl;
    t.iterations = res.iterations;
    t.values.assign(res.snapshots[k].begin(), res.snapshots[k].end());
    out.push_back(std::move(t));
  }
  return out;
}

ValueTable solve_brs(const BrsGrid& grid, const RelativeGame& game, double horizon,
                     const BrsSolveOptions& opts) {
  if (!(horizon > 0.0)) throw std::invalid_argument("solve_brs: horizon must be positive");
  return std::move(solve_brs(grid, game, std::vector<double>{horizon}, opts).front());
}

namespace {

constexpr char kMagic[4] = {'B', 'R', 'S', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kAxisBytes = 8 + 8 + 4;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 5 * kAxisBytes + 8;

template <typename T>
void put(std::vector<char>& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

template <typename T>
T get(const char*& p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  p += sizeof(U);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::size_t table_file_size(const BrsGrid& grid) { return kHeaderBytes + 4 * grid.size(); }

void save_table(const ValueTable& table, const std::filesystem::path& path) {
  if (table.values.size() != table.grid.size()) throw std::invalid_argument("save_table: value count mismatch");
  std::vector<char> buf(kMagic, kMagic + 4);
  buf.reserve(table_file_size(table.grid));
  put(buf, kVersion);
  put(buf, std::uint32_t{5});
  for (const auto& a : table.grid.axes) {
    put(buf, a.min);
    put(buf, a.step);
    put(buf, static_cast<std::uint32_t>(a.count));
  }
  put(buf, table.horizon);
  for (float v : table.values) put(buf, v);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_table: cannot open " + path.string());
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("save_table: write failed for " + path.string());
}

ValueTable load_table(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_table: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw std::runtime_error("load_table: bad magic in " + path.string());
  }
  const char* p = buf.data() + 4;
  const auto version = get<std::uint32_t>(p);
  if (version != kVersion) {
    throw std::runtime_error("load_table: unsupported format version " + std::to_string(version));
  }
  const auto axes = get<std::uint32_t>(p);
  if (axes != 5) throw std::runtime_error("load_table: expected 5 axes, found " + std::to_string(axes));
  if (buf.size() < kHeaderBytes) throw std::runtime_error("load_table: truncated header");
  ValueTable t;
  for (auto& a : t.grid.axes) {
    a.min = get<double>(p);
    a.step = get<double>(p);
    a.count = get<std::uint32_t>(p);
    if (!(a.step > 0.0) || !std::isfinite(a.min) || !std::isfinite(a.step) || a.count < 2) {
      throw std::runtime_error("load_table: invalid axis");
    }
    a.max = a.node(a.count - 1);
  }
  t.horizon = get<double>(p);
  if (!std::isfinite(t.horizon) || t.horizon < 0.0) throw std::runtime_error("load_table: invalid horizon");
  if (buf.size() != table_file_size(t.grid)) {
    throw std::runtime_error("load_table: size mismatch, expected " + std::to_string(table_file_size(t.grid)) +
                             " bytes, found " + std::to_string(buf.size()));
  }
  t.values.resize(t.grid.size());
  for (float& v : t.values) v = get<float>(p);
  return t;
}

PositionSlice brs_slice(const ValueTable& table, double psi, double v_ego, double v_s) {
  PositionSlice s;
  s.y1 = table.grid.axes[0];
  s.y2 = table.grid.axes[1];
  s.unsafe.resize(s.y1.count * s.y2.count);
  s.scope.assign(s.unsafe.size(), 1);
  for (std::size_t i = 0; i < s.y1.count; ++i) {
    for (std::size_t j = 0; j < s.y2.count; ++j) {
      s.unsafe[i * s.y2.count + j] = is_unsafe(table, {s.y1.node(i), s.y2.node(j), psi, v_ego, v_s}) ? 1 : 0;
    }
  }
  return s;
}

PositionSlice unsafe_region_frs(const GridAxis& y1, const GridAxis& y2, const FrsUnsafeQuery& q) {
  if (!(q.horizon >= 0.0) || q.time_samples == 0) throw std::invalid_argument("unsafe_region_frs: bad horizon");
  PositionSlice s;
  s.y1 = y1;
  s.y2 = y2;
  s.unsafe.assign(y1.count * y2.count, 0);
  s.scope.assign(s.unsafe.size(), 0);
  const double half_l = 0.5 * (q.ego.length + q.sur.length);
  const double half_w = 0.5 * (q.ego.width + q.sur.width);
  const double v1 = q.v_s * std::cos(q.psi) - q.v_ego;
  const double v2 = q.v_s * std::sin(q.psi) + q.lateral_speed;
  for (std::size_t i = 0; i < y1.count; ++i) {
    for (std::size_t j = 0; j < y2.count; ++j) {
      const double p1 = y1.node(i), p2 = y2.node(j);
      if (p1 < 0.0 || std::abs(p2) > q.lateral_limit) continue;
      s.scope[i * y2.count + j] = 1;
      bool hit = false;
      for (std::size_t k = 0; k <= q.time_samples && !hit; ++k) {
        const double t = q.horizon * static_cast<double>(k) / static_cast<double>(q.time_samples);
        const double h = 0.5 * t * t;
        const double lo1 = p1 + v1 * t + q.a1.lo * h, hi1 = p1 + v1 * t + q.a1.hi * h;
        const double lo2 = p2 + v2 * t + q.a2.lo * h, hi2 = p2 + v2 * t + q.a2.hi * h;
        hit = lo1 <= half_l && hi1 >= -half_l && lo2 <= half_w && hi2 >= -half_w;
      }
      s.unsafe[i * y2.count + j] = hit ? 1 : 0;
    }
  }
  return s;
}

}  // namespace reachrisk
