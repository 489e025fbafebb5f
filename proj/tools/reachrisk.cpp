#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "reachrisk/config.hpp"
#include "reachrisk/framework.hpp"

namespace fs = std::filesystem;
using namespace reachrisk;

namespace {

constexpr int kExitAlert = 3;

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os.precision(10);
  return os;
}

std::string table_path(const RunConfig& cfg, const std::string& override_path) {
  return override_path.empty() ? cfg.brs.table : override_path;
}

std::shared_ptr<const ValueTable> load_table_checked(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("BRS table not found: " + path + " (run brs-solve first)");
  return std::make_shared<const ValueTable>(load_table(path));
}

EventResult run_event(const RunConfig& cfg, const Framework& fw, Variant v, const ScenarioConfig& sc,
                      const SimTrace& trace) {
  const auto predictor = make_predictor(cfg, v, sc);
  return evaluate_event(trace, fw, *predictor, init_uniform(variant_betas(v), cfg.predictor.window));
}

void write_records_csv(std::ostream& os, const EventResult& r) {
  os << "t,gate,gate_value,gate_clamped,frs_run,p_col,alert,belief\n";
  for (const auto& rec : r.records) {
    os << rec.t << ',' << gate_name(rec.gate) << ',' << rec.gate_value << ',' << rec.gate_clamped << ','
       << rec.frs_run << ',' << rec.p_col << ',' << rec.alert << ',';
    for (std::size_t i = 0; i < rec.belief.size(); ++i) os << (i ? ";" : "") << rec.belief[i];
    os << '\n';
  }
}

nlohmann::json summary_json(const EventResult& r, Variant v, double threshold) {
  auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  return {{"variant", variant_name(v)},
          {"threshold", threshold},
          {"crashed", r.crashed},
          {"crash_time", r.crashed ? nlohmann::json(r.crash_time) : nlohmann::json(nullptr)},
          {"ticks", r.records.size()},
          {"escalations", r.escalations},
          {"alerts", r.alerts},
          {"max_p_col", r.max_p_col},
          {"first_escalation", opt(r.first_escalation)},
          {"first_alert", opt(r.first_alert)},
          {"timeliness", opt(r.timeliness)},
          {"false_positive", r.false_positive},
          {"belief_updates", r.belief_updates},
          {"skipped_observations", r.skipped_observations}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability-based collision risk detection toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::size_t workers = 0;
  app.add_option("-c,--config", config_path, "JSON run configuration (defaults when omitted)");
  app.add_option("-w,--workers", workers, "worker threads (overrides the config)");

  // validate-config
  auto* validate = app.add_subcommand("validate-config", "check a configuration and print it with defaults");
  bool quiet = false;
  validate->add_flag("-q,--quiet", quiet, "only report validity");

  // brs-solve
  auto* solve = app.add_subcommand("brs-solve", "solve the BRS value function and cache it");
  std::string solve_out;
  solve->add_option("-o,--out", solve_out, "table path (default: brs.table from the config)");

  // brs-slice
  auto* slice = app.add_subcommand("brs-slice", "export the unsafe area at fixed heading and speeds");
  std::string slice_table, slice_out;
  double slice_psi = 0.0, slice_ve = 30.0, slice_vs = 28.0, slice_lat = 0.0;
  slice->add_option("-t,--table", slice_table, "BRS table (default from config)");
  slice->add_option("--psi-deg", slice_psi, "relative heading, degrees");
  slice->add_option("--v-ego", slice_ve, "ego speed, m/s");
  slice->add_option("--v-s", slice_vs, "surrounding speed, m/s");
  slice->add_option("--lateral-speed", slice_lat, "extra lateral speed for the FRS comparison, m/s");
  slice->add_option("-o,--out", slice_out, "CSV path (stdout when omitted)");

  // run
  auto* run = app.add_subcommand("run", "evaluate one cut-in event through the framework");
  std::string run_table, run_trace, run_out, run_variant;
  std::optional<double> run_ve, run_vs;
  run->add_option("-t,--table", run_table, "BRS table (default from config)");
  run->add_option("--trace", run_trace, "trajectory CSV to evaluate instead of simulating");
  run->add_option("--v-ego", run_ve, "initial ego speed, m/s");
  run->add_option("--v-sur", run_vs, "initial surrounding speed, m/s");
  run->add_option("--variant", run_variant, "HSRS, PSRS, PSRS-3beta or PSRS-5beta");
  run->add_option("-o,--out-dir", run_out, "output directory (default from config)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run the speed sweep for every variant");
  std::string sweep_table, sweep_out;
  sweep_cmd->add_option("-t,--table", sweep_table, "BRS table (default from config)");
  sweep_cmd->add_option("-o,--out-dir", sweep_out, "output directory (default from config)");

  // export-field
  auto* field = app.add_subcommand("export-field", "export the predicted occupancy field at one instant");
  std::string field_out;
  double field_t = 2.4;
  double field_min = 0.01;
  std::optional<double> field_ve, field_vs;
  field->add_option("--time", field_t, "assessment time, s");
  field->add_option("--v-ego", field_ve, "initial ego speed, m/s");
  field->add_option("--v-sur", field_vs, "initial surrounding speed, m/s");
  field->add_option("--min-prob", field_min, "keep entries with probability above this");
  field->add_option("-o,--out", field_out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config_from(config_path);
    if (workers > 0) cfg.workers = workers;

    if (*validate) {
      if (!quiet) std::cout << dump_config(cfg) << '\n';
      std::cerr << "config ok\n";
      return 0;
    }

    if (*solve) {
      const BrsGrid grid = make_brs_grid(cfg);
      const RelativeGame game = make_game(cfg);
      BrsSolveOptions opts;
      opts.cfl = cfg.brs.cfl;
      opts.order = cfg.brs.order;
      opts.workers = cfg.workers;
      const auto t0 = std::chrono::steady_clock::now();
      opts.progress = [&](std::size_t it, double t) {
        if (it % 50 == 0) std::cerr << "  iteration " << it << "  t = " << t << " s\n";
      };
      std::cerr << "solving " << grid.size() << " nodes to horizon " << cfg.brs.horizon << " s\n";
      const ValueTable table = solve_brs(grid, game, cfg.brs.horizon, opts);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const std::string out = table_path(cfg, solve_out);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      save_table(table, out);
      std::printf("nodes %zu iterations %zu wall %.2f s table %s\n", grid.size(), table.iterations, secs,
                  out.c_str());
      return 0;
    }

    if (*slice) {
      const auto table = load_table_checked(table_path(cfg, slice_table));
      const double psi = slice_psi * std::numbers::pi / 180.0;
      const PositionSlice brs = brs_slice(*table, psi, slice_ve, slice_vs);
      FrsUnsafeQuery q;
      q.v_ego = slice_ve;
      q.v_s = slice_vs;
      q.psi = psi;
      q.lateral_speed = slice_lat;
      q.horizon = table->horizon;
      q.a1 = cfg.brs.input_box.xdd;
      q.a2 = cfg.brs.input_box.ydd;
      q.ego = cfg.scenario.geometry;
      q.sur = cfg.scenario.geometry;
      q.lateral_limit = cfg.scenario.lane_width;
      const PositionSlice frs = unsafe_region_frs(brs.y1, brs.y2, q);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!slice_out.empty()) {
        file = open_out(slice_out);
        os = &file;
      }
      *os << "y1,y2,brs_unsafe,frs_unsafe,in_scope\n";
      for (std::size_t i = 0; i < brs.y1.count; ++i) {
        for (std::size_t j = 0; j < brs.y2.count; ++j) {
          *os << brs.y1.node(i) << ',' << brs.y2.node(j) << ',' << brs.at(i, j) << ',' << frs.at(i, j) << ','
              << frs.in_scope(i, j) << '\n';
        }
      }
      return 0;
    }

    if (*run) {
      const auto table = load_table_checked(table_path(cfg, run_table));
      const Framework fw(table, make_engine(cfg), make_framework_config(cfg));
      Variant v = config_variant(cfg);
      if (!run_variant.empty()) {
        const auto parsed = parse_variant(run_variant);
        if (!parsed) throw std::invalid_argument("unknown variant " + run_variant);
        v = *parsed;
      }
      ScenarioConfig sc = cfg.scenario;
      if (run_ve) sc.v_ego = *run_ve;
      if (run_vs) sc.v_sur = *run_vs;
      SimTrace trace;
      if (run_trace.empty()) {
        trace = simulate(sc);
      } else {
        std::ifstream in(run_trace);
        if (!in) throw std::runtime_error("cannot open trace " + run_trace);
        trace = read_trace_csv(in, sc.geometry);
      }
      const EventResult r = run_event(cfg, fw, v, sc, trace);
      const fs::path dir = run_out.empty() ? fs::path(cfg.output_dir) : fs::path(run_out);
      {
        auto os = open_out(dir / "ticks.csv");
        write_records_csv(os, r);
      }
      const auto summary = summary_json(r, v, cfg.framework.threshold);
      {
        auto os = open_out(dir / "summary.json");
        os << summary.dump(2) << '\n';
      }
      std::cout << summary.dump(2) << '\n';
      return r.alerts > 0 ? kExitAlert : 0;
    }

    if (*sweep_cmd) {
      const auto table = load_table_checked(table_path(cfg, sweep_table));
      const Framework fw(table, make_engine(cfg), make_framework_config(cfg));
      std::vector<Variant> variants;
      for (const auto& name : cfg.sweep.variants) variants.push_back(*parse_variant(name));
      const auto events = sweep(cfg.scenario, cfg.sweep.ego, cfg.sweep.sur, cfg.workers);
      const fs::path dir = sweep_out.empty() ? fs::path(cfg.output_dir) : fs::path(sweep_out);
      auto ev_os = open_out(dir / "events.csv");
      auto tl_os = open_out(dir / "timeliness.csv");
      ev_os << "v_ego,v_sur,crashed,crash_time,variant,escalations,alerts,max_p_col,first_alert,timeliness,false_positive\n";
      tl_os << "v_ego,v_sur,variant,threshold,timeliness\n";
      std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> means;  // (variant, threshold)
      std::size_t crashes = 0;
      for (const auto& e : events) {
        ScenarioConfig sc = cfg.scenario;
        sc.v_ego = e.v_ego;
        sc.v_sur = e.v_sur;
        const SimTrace trace = simulate(sc);
        crashes += trace.crashed;
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
          const EventResult r = run_event(cfg, fw, variants[vi], sc, trace);
          ev_os << e.v_ego << ',' << e.v_sur << ',' << trace.crashed << ',' << (trace.crashed ? trace.crash_time : NAN)
                << ',' << variant_name(variants[vi]) << ',' << r.escalations << ',' << r.alerts << ',' << r.max_p_col
                << ',' << r.first_alert.value_or(NAN) << ',' << r.timeliness.value_or(NAN) << ','
                << r.false_positive << '\n';
          if (!trace.crashed) continue;
          const auto series = r.p_col_series();
          for (std::size_t ti = 0; ti < cfg.sweep.thresholds.size(); ++ti) {
            const auto tl = timeliness(series, trace.crash_time, cfg.sweep.thresholds[ti]);
            tl_os << e.v_ego << ',' << e.v_sur << ',' << variant_name(variants[vi]) << ','
                  << cfg.sweep.thresholds[ti] << ',' << tl.value_or(NAN) << '\n';
            auto& m = means[{vi, ti}];
            m.first += tl.value_or(0.0);
            m.second += 1;
          }
        }
      }
      auto mean_os = open_out(dir / "timeliness_mean.csv");
      mean_os << "variant,threshold,mean_timeliness,crash_events\n";
      for (const auto& [key, m] : means) {
        mean_os << variant_name(variants[key.first]) << ',' << cfg.sweep.thresholds[key.second] << ','
                << m.first / static_cast<double>(m.second) << ',' << m.second << '\n';
      }
      std::printf("events %zu crashes %zu variants %zu -> %s\n", events.size(), crashes, variants.size(),
                  dir.string().c_str());
      return 0;
    }

    if (*field) {
      ScenarioConfig sc = cfg.scenario;
      if (field_ve) sc.v_ego = *field_ve;
      if (field_vs) sc.v_sur = *field_vs;
      const SimTrace trace = simulate(sc);
      const auto engine = make_engine(cfg);
      const Variant v = config_variant(cfg);
      const auto predictor = make_predictor(cfg, v, sc);
      const TraceSample& now = trace.at(field_t);
      std::vector<Observation> history;
      for (const auto& s : trace.samples) {
        if (s.t > now.t + 1e-9) break;
        if (s.t >= now.t - cfg.framework.history - 1e-9) history.push_back({s.t, s.sur, s.sur_accel});
      }
      const AccelerationForecast f = predictor->forecast(history);
      const BeliefVector belief = init_uniform(variant_betas(v), cfg.predictor.window);
      const PointMassState start{now.sur.y1 - now.ego.y1, now.sur.y2 - now.ego.y2, now.sur.v1, now.sur.v2};
      const auto fields = engine->propagate(ProbabilityField::point(engine->states(), start), f, belief);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!field_out.empty()) {
        file = open_out(field_out);
        os = &file;
      }
      write_field_csv(*os, engine->states(), fields, field_min);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
