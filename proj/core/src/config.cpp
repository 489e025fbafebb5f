#include "reachrisk/config.hpp"

#include <cmath>
#include <concepts>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace reachrisk {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

// Reads known keys out of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) fail(child(key), "unknown key");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    read(*it, child(key), out);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  static void read(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) fail(path, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(path, "must be finite");
  }
  static void read(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    out = v.get<bool>();
  }
  static void read(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) fail(path, "expected a string");
    out = v.get<std::string>();
  }
  static void read(const json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    out = v.get<int>();
  }
  template <std::unsigned_integral U>
  static void read(const json& v, const std::string& path, U& out) {
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    out = v.get<U>();
  }
  static void read(const json& v, const std::string& path, std::vector<double>& out) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      double x = 0.0;
      read(v[i], path + "[" + std::to_string(i) + "]", x);
      out.push_back(x);
    }
  }
  static void read(const json& v, const std::string& path, std::vector<std::string>& out) {
    if (!v.is_array()) fail(path, "expected an array of strings");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::string s;
      read(v[i], path + "[" + std::to_string(i) + "]", s);
      out.push_back(s);
    }
  }
  static void read(const json& v, const std::string& path, Interval& out) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected [lo, hi]");
    read(v[0], path + "[0]", out.lo);
    read(v[1], path + "[1]", out.hi);
  }
  static void read(const json& v, const std::string& path, AxisSpec& out) {
    Section s(v, path);
    s.get("min", out.min);
    s.get("max", out.max);
    s.get("step", out.step);
  }
  static void read(const json& v, const std::string& path, SweepRange& out) {
    Section s(v, path);
    s.get("lo", out.lo);
    s.get("hi", out.hi);
    s.get("step", out.step);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* const kStateAxisNames[4] = {"y1", "y2", "v1", "v2"};
const char* const kBrsAxisNames[5] = {"y1", "y2", "psi_deg", "v_ego", "v_s"};

void read_geometry(Section& parent, const std::string& key, VehicleGeometry& g) {
  if (!parent.has(key)) return;
  Section s(parent.at(key), parent.child(key));
  s.get("length", g.length);
  s.get("width", g.width);
  s.get("l_f", g.l_f);
  s.get("l_r", g.l_r);
}

json axis_json(const AxisSpec& a) { return {{"min", a.min}, {"max", a.max}, {"step", a.step}}; }

}  // namespace

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  {
    Section top(root, "");
    top.get("version", cfg.version);
    if (cfg.version > kConfigVersion) {
      fail("version", "newer than supported version " + std::to_string(kConfigVersion));
    }
    if (cfg.version < 1) fail("version", "must be at least 1");
    top.get("seed", cfg.seed);
    top.get("workers", cfg.workers);
    top.get("observation_noise", cfg.observation_noise);
    top.get("output_dir", cfg.output_dir);

    if (top.has("frs")) {
      Section s(top.at("frs"), "frs");
      for (std::size_t d = 0; d < 4; ++d) s.get(kStateAxisNames[d], cfg.frs.state[d]);
      s.get("a1", cfg.frs.a1);
      s.get("a2", cfg.frs.a2);
      s.get("tail_absorption", cfg.frs.tail_absorption);
      s.get("a_max", cfg.frs.a_max);
      s.get("omega_max", cfg.frs.omega_max);
      s.get("v1_min", cfg.frs.v1_min);
      s.get("dt", cfg.frs.dt);
      s.get("threshold", cfg.frs.threshold);
      s.get("steps", cfg.frs.steps);
    }
    if (top.has("brs")) {
      Section s(top.at("brs"), "brs");
      s.get("grid", cfg.brs.grid);
      if (s.has("axes")) {
        Section ax(s.at("axes"), "brs.axes");
        for (std::size_t d = 0; d < 5; ++d) ax.get(kBrsAxisNames[d], cfg.brs.axes[d]);
      }
      s.get("horizon", cfg.brs.horizon);
      s.get("cfl", cfg.brs.cfl);
      s.get("order", cfg.brs.order);
      s.get("slip_samples", cfg.brs.slip_samples);
      s.get("table", cfg.brs.table);
      if (s.has("input_box")) {
        Section b(s.at("input_box"), "brs.input_box");
        b.get("xdd", cfg.brs.input_box.xdd);
        b.get("ydd", cfg.brs.input_box.ydd);
        b.get("x_dot", cfg.brs.input_box.x_dot);
        b.get("y_dot", cfg.brs.input_box.y_dot);
      }
    }
    if (top.has("predictor")) {
      Section s(top.at("predictor"), "predictor");
      s.get("variant", cfg.predictor.variant);
      s.get("window", cfg.predictor.window);
      if (s.has("heuristic")) {
        Section h(s.at("heuristic"), "predictor.heuristic");
        auto& p = cfg.predictor.heuristic;
        h.get("keep_threshold", p.keep_threshold);
        h.get("dominant_prob", p.dominant_prob);
        h.get("lateral_mean", p.lateral_mean);
        h.get("sigma1", p.sigma1);
        h.get("sigma2", p.sigma2);
        h.get("rho", p.rho);
      }
      if (s.has("generative")) {
        Section g(s.at("generative"), "predictor.generative");
        auto& p = cfg.predictor.generative;
        g.get("sigma1", p.sigma1);
        g.get("sigma2", p.sigma2);
        g.get("rho", p.rho);
      }
    }
    if (top.has("framework")) {
      Section s(top.at("framework"), "framework");
      auto& f = cfg.framework;
      s.get("threshold", f.threshold);
      s.get("tick", f.tick);
      s.get("warmup", f.warmup);
      s.get("history", f.history);
      s.get("far_face_safe", f.far_face_safe);
      s.get("escalate_on_clamp", f.escalate_on_clamp);
    }
    if (top.has("scenario")) {
      Section s(top.at("scenario"), "scenario");
      auto& c = cfg.scenario;
      s.get("v_ego", c.v_ego);
      s.get("v_sur", c.v_sur);
      s.get("gap", c.gap);
      s.get("gap_time", c.gap_time);
      s.get("lc_start", c.lc_start);
      s.get("lc_duration", c.lc_duration);
      s.get("lane_width", c.lane_width);
      s.get("sim_dt", c.sim_dt);
      s.get("duration", c.duration);
      s.get("sur_desired_speed", c.sur_desired_speed);
      s.get("leader_lateral_threshold", c.leader_lateral_threshold);
      if (s.has("idm")) {
        Section i(s.at("idm"), "scenario.idm");
        i.get("time_headway", c.idm.time_headway);
        i.get("min_gap", c.idm.min_gap);
        i.get("accel", c.idm.accel);
        i.get("decel", c.idm.decel);
        i.get("accel_floor", c.idm.accel_floor);
      }
      read_geometry(s, "vehicle", c.geometry);
    }
    if (top.has("sweep")) {
      Section s(top.at("sweep"), "sweep");
      s.get("ego", cfg.sweep.ego);
      s.get("sur", cfg.sweep.sur);
      s.get("thresholds", cfg.sweep.thresholds);
      s.get("variants", cfg.sweep.variants);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["observation_noise"] = cfg.observation_noise;
  j["output_dir"] = cfg.output_dir;

  json frs;
  for (std::size_t d = 0; d < 4; ++d) frs[kStateAxisNames[d]] = axis_json(cfg.frs.state[d]);
  frs["a1"] = axis_json(cfg.frs.a1);
  frs["a2"] = axis_json(cfg.frs.a2);
  frs["tail_absorption"] = cfg.frs.tail_absorption;
  frs["a_max"] = cfg.frs.a_max;
  frs["omega_max"] = cfg.frs.omega_max;
  frs["v1_min"] = cfg.frs.v1_min;
  frs["dt"] = cfg.frs.dt;
  frs["threshold"] = cfg.frs.threshold;
  frs["steps"] = cfg.frs.steps;
  j["frs"] = frs;

  json brs;
  brs["grid"] = cfg.brs.grid;
  if (cfg.brs.grid == "custom") {
    json ax;
    for (std::size_t d = 0; d < 5; ++d) ax[kBrsAxisNames[d]] = axis_json(cfg.brs.axes[d]);
    brs["axes"] = ax;
  }
  brs["horizon"] = cfg.brs.horizon;
  brs["cfl"] = cfg.brs.cfl;
  brs["order"] = cfg.brs.order;
  brs["slip_samples"] = cfg.brs.slip_samples;
  brs["table"] = cfg.brs.table;
  const auto& b = cfg.brs.input_box;
  brs["input_box"] = {{"xdd", {b.xdd.lo, b.xdd.hi}},
                      {"ydd", {b.ydd.lo, b.ydd.hi}},
                      {"x_dot", {b.x_dot.lo, b.x_dot.hi}},
                      {"y_dot", {b.y_dot.lo, b.y_dot.hi}}};
  j["brs"] = brs;

  const auto& h = cfg.predictor.heuristic;
  const auto& g = cfg.predictor.generative;
  j["predictor"] = {{"variant", cfg.predictor.variant},
                    {"window", cfg.predictor.window},
                    {"heuristic",
                     {{"keep_threshold", h.keep_threshold},
                      {"dominant_prob", h.dominant_prob},
                      {"lateral_mean", h.lateral_mean},
                      {"sigma1", h.sigma1},
                      {"sigma2", h.sigma2},
                      {"rho", h.rho}}},
                    {"generative", {{"sigma1", g.sigma1}, {"sigma2", g.sigma2}, {"rho", g.rho}}}};

  const auto& f = cfg.framework;
  j["framework"] = {{"threshold", f.threshold},         {"tick", f.tick},
                    {"warmup", f.warmup},               {"history", f.history},
                    {"far_face_safe", f.far_face_safe}, {"escalate_on_clamp", f.escalate_on_clamp}};

  const auto& c = cfg.scenario;
  j["scenario"] = {{"v_ego", c.v_ego},
                   {"v_sur", c.v_sur},
                   {"gap", c.gap},
                   {"gap_time", c.gap_time},
                   {"lc_start", c.lc_start},
                   {"lc_duration", c.lc_duration},
                   {"lane_width", c.lane_width},
                   {"sim_dt", c.sim_dt},
                   {"duration", c.duration},
                   {"sur_desired_speed", c.sur_desired_speed},
                   {"leader_lateral_threshold", c.leader_lateral_threshold},
                   {"idm",
                    {{"time_headway", c.idm.time_headway},
                     {"min_gap", c.idm.min_gap},
                     {"accel", c.idm.accel},
                     {"decel", c.idm.decel},
                     {"accel_floor", c.idm.accel_floor}}},
                   {"vehicle",
                    {{"length", c.geometry.length},
                     {"width", c.geometry.width},
                     {"l_f", c.geometry.l_f},
                     {"l_r", c.geometry.l_r}}}};

  j["sweep"] = {{"ego", {{"lo", cfg.sweep.ego.lo}, {"hi", cfg.sweep.ego.hi}, {"step", cfg.sweep.ego.step}}},
                {"sur", {{"lo", cfg.sweep.sur.lo}, {"hi", cfg.sweep.sur.hi}, {"step", cfg.sweep.sur.step}}},
                {"thresholds", cfg.sweep.thresholds},
                {"variants", cfg.sweep.variants}};
  return j.dump(2);
}

void RunConfig::validate() const {
  auto check_axis = [](const AxisSpec& a, const std::string& path) {
    if (!(a.step > 0.0) || !(a.max > a.min)) fail(path, "needs min < max and step > 0");
  };
  if (workers == 0) fail("workers", "must be at least 1");
  if (!(observation_noise >= 0.0)) fail("observation_noise", "must be non-negative");
  for (std::size_t d = 0; d < 4; ++d) check_axis(frs.state[d], std::string("frs.") + kStateAxisNames[d]);
  check_axis(frs.a1, "frs.a1");
  check_axis(frs.a2, "frs.a2");
  if (!(frs.dt > 0.0)) fail("frs.dt", "must be positive");
  if (frs.threshold < 0.0) fail("frs.threshold", "must be non-negative");
  if (frs.steps == 0) fail("frs.steps", "must be at least 1");
  if (!(frs.a_max > 0.0) || !(frs.omega_max > 0.0)) fail("frs", "a_max and omega_max must be positive");

  if (brs.grid != "desk" && brs.grid != "full" && brs.grid != "custom") {
    fail("brs.grid", "expected desk, full or custom");
  }
  if (brs.grid == "custom") {
    for (std::size_t d = 0; d < 5; ++d) check_axis(brs.axes[d], std::string("brs.axes.") + kBrsAxisNames[d]);
  }
  if (!(brs.horizon > 0.0)) fail("brs.horizon", "must be positive");
  if (!(brs.cfl > 0.0 && brs.cfl <= 1.0)) fail("brs.cfl", "must be in (0, 1]");
  if (brs.order != 1 && brs.order != 2) fail("brs.order", "must be 1 or 2");
  if (brs.slip_samples == 0) fail("brs.slip_samples", "must be at least 1");
  const auto& box = brs.input_box;
  for (const auto& [name, iv] : {std::pair{"xdd", box.xdd}, {"ydd", box.ydd}, {"x_dot", box.x_dot}, {"y_dot", box.y_dot}}) {
    if (iv.lo > iv.hi) fail(std::string("brs.input_box.") + name, "lo exceeds hi");
  }
  if (!(box.x_dot.lo > 0.0)) fail("brs.input_box.x_dot", "speeds must be positive");

  if (!parse_variant(predictor.variant)) fail("predictor.variant", "unknown variant " + predictor.variant);
  if (predictor.window == 0) fail("predictor.window", "must be at least 1");
  try {
    BivariateNormal{0, 0, predictor.heuristic.sigma1, predictor.heuristic.sigma2, predictor.heuristic.rho}.validate();
    BivariateNormal{0, 0, predictor.generative.sigma1, predictor.generative.sigma2, predictor.generative.rho}.validate();
  } catch (const std::invalid_argument& e) {
    fail("predictor", e.what());
  }
  if (predictor.heuristic.dominant_prob < 0.0 || predictor.heuristic.dominant_prob > 1.0) {
    fail("predictor.heuristic.dominant_prob", "outside [0, 1]");
  }

  try {
    make_framework_config(*this).validate();
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (std::abs(framework.tick - frs.dt) > 1e-12) fail("framework.tick", "must equal frs.dt");

  for (double t : sweep.thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) fail("sweep.thresholds", "values must lie in [0, 1]");
  }
  for (const auto& v : sweep.variants) {
    if (!parse_variant(v)) fail("sweep.variants", "unknown variant " + v);
  }
  if (!(sweep.ego.step > 0.0) || sweep.ego.hi < sweep.ego.lo) fail("sweep.ego", "bad range");
  if (!(sweep.sur.step > 0.0) || sweep.sur.hi < sweep.sur.lo) fail("sweep.sur", "bad range");
}

StateGrid make_state_grid(const RunConfig& cfg) {
  return StateGrid({cfg.frs.state[0].axis(), cfg.frs.state[1].axis(), cfg.frs.state[2].axis(),
                    cfg.frs.state[3].axis()});
}

InputGrid make_input_grid(const RunConfig& cfg) {
  return InputGrid(cfg.frs.a1.axis(), cfg.frs.a2.axis(), cfg.frs.tail_absorption);
}

InputConstraintConfig make_limits(const RunConfig& cfg) {
  InputConstraintConfig l;
  l.a_max = cfg.frs.a_max;
  l.omega_max = cfg.frs.omega_max;
  l.dt = cfg.frs.dt;
  l.v1_min = cfg.frs.v1_min;
  return l;
}

std::shared_ptr<FrsEngine> make_engine(const RunConfig& cfg) {
  FrsConfig fc;
  fc.dt = cfg.frs.dt;
  fc.threshold = cfg.frs.threshold;
  fc.workers = cfg.workers;
  return std::make_shared<FrsEngine>(make_state_grid(cfg), make_input_grid(cfg), make_limits(cfg), fc);
}

BrsGrid make_brs_grid(const RunConfig& cfg) {
  if (cfg.brs.grid == "full") return BrsGrid::full();
  if (cfg.brs.grid == "desk") return BrsGrid::desk();
  BrsGrid g;
  for (std::size_t d = 0; d < 5; ++d) {
    const double scale = d == 2 ? kDeg : 1.0;
    g.axes[d] = GridAxis(cfg.brs.axes[d].min * scale, cfg.brs.axes[d].max * scale, cfg.brs.axes[d].step * scale);
  }
  return g;
}

RelativeGame make_game(const RunConfig& cfg) {
  const VehicleGeometry& geom = cfg.scenario.geometry;
  return RelativeGame(derive_input_ranges(cfg.brs.input_box, geom), geom, geom, cfg.brs.slip_samples);
}

FrameworkConfig make_framework_config(const RunConfig& cfg) {
  FrameworkConfig f;
  f.threshold = cfg.framework.threshold;
  f.tick = cfg.framework.tick;
  f.warmup = cfg.framework.warmup;
  f.history = cfg.framework.history;
  f.gate.far_face_safe = cfg.framework.far_face_safe;
  f.gate.escalate_on_clamp = cfg.framework.escalate_on_clamp;
  f.observation_noise = cfg.observation_noise;
  f.seed = cfg.seed;
  f.ego_geometry = cfg.scenario.geometry;
  f.sur_geometry = cfg.scenario.geometry;
  return f;
}

Variant config_variant(const RunConfig& cfg) {
  const auto v = parse_variant(cfg.predictor.variant);
  if (!v) fail("predictor.variant", "unknown variant " + cfg.predictor.variant);
  return *v;
}

std::unique_ptr<Predictor> make_predictor(const RunConfig& cfg, Variant v, const ScenarioConfig& scenario) {
  const ForecastShape shape{cfg.frs.steps, cfg.frs.dt};
  if (variant_uses_heuristic(v)) return std::make_unique<HeuristicPredictor>(cfg.predictor.heuristic, shape);
  return std::make_unique<GenerativePredictor>(std::make_shared<const SurroundingModel>(scenario),
                                               cfg.predictor.generative, shape);
}

}  // namespace reachrisk
