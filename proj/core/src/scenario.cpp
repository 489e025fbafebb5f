#include "reachrisk/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "reachrisk/parallel.hpp"

namespace reachrisk {

double idm_accel(double v, double dv, std::optional<double> gap, const IdmParams& p) {
  const double free_term = 1.0 - std::pow(v / p.v0, 4);
  if (!gap) {
    return std::max(p.accel * free_term, p.accel_floor);
  }
  if (!(*gap > 0.0)) {
    throw std::invalid_argument("idm_accel: non-positive gap to leader");
  }
  const double s_star =
      p.min_gap + std::max(0.0, v * p.time_headway + v * dv / (2.0 * std::sqrt(p.accel * p.decel)));
  const double ratio = s_star / *gap;
  return std::max(p.accel * (free_term - ratio * ratio), p.accel_floor);
}

LateralSample lateral_profile(double t, double duration, double lane_width) {
  const double tau = std::clamp(t / duration, 0.0, 1.0);
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  LateralSample s;
  s.y = lane_width * (10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2);
  if (tau > 0.0 && tau < 1.0) {
    s.v = lane_width / duration * (30.0 * t2 - 60.0 * t3 + 30.0 * t2 * t2);
    s.a = lane_width / (duration * duration) * (60.0 * tau - 180.0 * t2 + 120.0 * t3);
  }
  return s;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("scenario: ") + what);
  };
  require(v_ego > 0.0 && v_sur > 0.0, "speeds must be positive");
  require(sim_dt > 0.0, "sim_dt must be positive");
  require(lc_duration > 0.0, "lane-change duration must be positive");
  require(duration > gap_time, "duration must exceed gap_time");
  require(lane_width > 0.0, "lane width must be positive");
  require(idm.time_headway > 0.0 && idm.min_gap > 0.0 && idm.accel > 0.0 && idm.decel > 0.0,
          "IDM parameters must be positive");
  require(idm.accel_floor < 0.0, "IDM acceleration floor must be negative");
  require(sur_desired_speed > 0.0, "desired speed must be positive");
}

SurroundingModel::SurroundingModel(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

IdmParams SurroundingModel::idm() const {
  IdmParams p = cfg_.idm;
  p.v0 = cfg_.sur_desired_speed;
  return p;
}

Accel2 SurroundingModel::accel(double t, const PointMassState& s, double lateral_sign,
                               std::optional<double> maneuver_start) const {
  const double start = maneuver_start.value_or(cfg_.lc_start);
  Accel2 a;
  a.a1 = idm_accel(s.v1, 0.0, std::nullopt, idm());
  if (t >= start) {
    a.a2 = lateral_sign * lateral_profile(t - start, cfg_.lc_duration, cfg_.lane_width).a;
  }
  return a;
}

const TraceSample& SimTrace::at(double t) const {
  if (samples.empty()) throw std::out_of_range("empty trace");
  const double h = dt();
  const double u = (t - samples.front().t) / h;
  auto i = static_cast<long long>(std::floor(u + 1e-9));
  i = std::clamp<long long>(i, 0, static_cast<long long>(samples.size()) - 1);
  return samples[static_cast<std::size_t>(i)];
}

double SimTrace::dt() const {
  if (samples.size() < 2) return 1.0;
  return samples[1].t - samples[0].t;
}

bool in_collision(const PointMassState& a, const PointMassState& b, const VehicleGeometry& geom) {
  return std::abs(a.y1 - b.y1) < geom.length && std::abs(a.y2 - b.y2) < geom.width;
}

namespace {

Accel2 ego_accel(const ScenarioConfig& cfg, const PointMassState& ego, const PointMassState& sur) {
  IdmParams p = cfg.idm;
  p.v0 = cfg.v_ego;
  const double ahead = sur.y1 - ego.y1;
  std::optional<double> gap;
  double dv = 0.0;
  if (ahead > 0.0 && std::abs(sur.y2 - ego.y2) < cfg.leader_lateral_threshold) {
    gap = ahead - cfg.geometry.length;
    dv = ego.v1 - sur.v1;
  }
  return {idm_accel(ego.v1, dv, gap, p), 0.0};
}

}  // namespace

SimTrace simulate(const ScenarioConfig& cfg) {
  cfg.validate();
  const SurroundingModel model(cfg);
  const double dt = cfg.sim_dt;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / dt));
  const auto pre_steps = static_cast<std::size_t>(std::llround(cfg.gap_time / dt));

  PointMassState ego{0.0, 0.0, cfg.v_ego, 0.0};
  PointMassState sur{0.0, -cfg.lane_width, cfg.v_sur, 0.0};

  // Place the surrounding vehicle so the centre gap equals cfg.gap at gap_time.
  {
    PointMassState e = ego;
    PointMassState s = sur;
    for (std::size_t k = 0; k < pre_steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const Accel2 ae = ego_accel(cfg, e, s);
      const Accel2 as = model.accel(t, s);
      e = step_point_mass(e, ae, dt);
      s = step_point_mass(s, as, dt);
    }
    sur.y1 = cfg.gap - (s.y1 - e.y1);
  }

  SimTrace trace;
  trace.samples.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    TraceSample sample;
    sample.t = t;
    sample.ego = ego;
    sample.sur = sur;
    if (in_collision(ego, sur, cfg.geometry)) {
      trace.samples.push_back(sample);
      trace.crashed = true;
      trace.crash_time = t;
      break;
    }
    sample.ego_accel = ego_accel(cfg, ego, sur);
    sample.sur_accel = model.accel(t, sur);
    trace.samples.push_back(sample);
    ego = step_point_mass(ego, sample.ego_accel, dt);
    sur = step_point_mass(sur, sample.sur_accel, dt);
  }
  return trace;
}

std::vector<double> SweepRange::values() const {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("sweep range: bad bounds");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

std::vector<SweepEvent> sweep(const ScenarioConfig& base, const SweepRange& ego,
                              const SweepRange& sur, std::size_t workers) {
  const auto ve = ego.values();
  const auto vs = sur.values();
  std::vector<SweepEvent> events(ve.size() * vs.size());
  parallel_chunks(events.size(), workers, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      ScenarioConfig cfg = base;
      cfg.v_ego = ve[i / vs.size()];
      cfg.v_sur = vs[i % vs.size()];
      const SimTrace trace = simulate(cfg);
      events[i] = {cfg.v_ego, cfg.v_sur, trace.crashed, trace.crash_time};
    }
  });
  return events;
}

CrashBand crash_band(std::span<const SweepEvent> events, double diff_step) {
  CrashBand band;
  std::set<long long> crash_diffs;
  for (const auto& ev : events) {
    if (!ev.crashed) continue;
    ++band.crashes;
    crash_diffs.insert(std::llround((ev.v_ego - ev.v_sur) / diff_step));
  }
  if (crash_diffs.empty()) return band;
  band.min_diff = static_cast<double>(*crash_diffs.begin()) * diff_step;
  band.max_diff = static_cast<double>(*crash_diffs.rbegin()) * diff_step;
  band.contiguous =
      static_cast<long long>(crash_diffs.size()) == *crash_diffs.rbegin() - *crash_diffs.begin() + 1;
  return band;
}

std::optional<double> timeliness(std::span<const TimedValue> series, double crash_time,
                                 double threshold) {
  for (const auto& s : series) {
    if (s.t > crash_time) break;
    if (s.value >= threshold && s.value > 0.0) return crash_time - s.t;
  }
  return std::nullopt;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "t,vehicle_id,y1,y2,v1,v2,a1,a2\n";
  os.precision(17);
  for (const auto& s : trace.samples) {
    os << s.t << ",0," << s.ego.y1 << ',' << s.ego.y2 << ',' << s.ego.v1 << ',' << s.ego.v2 << ','
       << s.ego_accel.a1 << ',' << s.ego_accel.a2 << '\n';
    os << s.t << ",1," << s.sur.y1 << ',' << s.sur.y2 << ',' << s.sur.v1 << ',' << s.sur.v2 << ','
       << s.sur_accel.a1 << ',' << s.sur_accel.a2 << '\n';
  }
}

SimTrace read_trace_csv(std::istream& is, const VehicleGeometry& geom) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace csv: empty input");
  if (line.rfind("t,vehicle_id", 0) != 0) throw std::runtime_error("trace csv: bad header");

  struct Row {
    PointMassState s;
    Accel2 a;
  };
  std::map<double, std::map<int, Row>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> v;
    while (std::getline(ss, field, ',')) {
      try {
        v.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error("trace csv: bad number on line " + std::to_string(lineno));
      }
    }
    if (v.size() != 8) {
      throw std::runtime_error("trace csv: expected 8 columns on line " + std::to_string(lineno));
    }
    const int id = static_cast<int>(v[1]);
    if (id != 0 && id != 1) {
      throw std::runtime_error("trace csv: vehicle_id must be 0 or 1 on line " +
                               std::to_string(lineno));
    }
    rows[v[0]][id] = Row{{v[2], v[3], v[4], v[5]}, {v[6], v[7]}};
  }
  SimTrace trace;
  for (const auto& [t, vehicles] : rows) {
    if (vehicles.size() != 2) {
      throw std::runtime_error("trace csv: missing vehicle at t = " + std::to_string(t));
    }
    TraceSample s;
    s.t = t;
    s.ego = vehicles.at(0).s;
    s.ego_accel = vehicles.at(0).a;
    s.sur = vehicles.at(1).s;
    s.sur_accel = vehicles.at(1).a;
    trace.samples.push_back(s);
    if (!trace.crashed && in_collision(s.ego, s.sur, geom)) {
      trace.crashed = true;
      trace.crash_time = t;
    }
  }
  if (trace.samples.size() < 2) throw std::runtime_error("trace csv: fewer than two samples");
  return trace;
}

}  // namespace reachrisk
