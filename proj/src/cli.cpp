#include "rdv/cli.hpp"

#include "rdv/errors.hpp"
#include "rdv/metrics.hpp"
#include "rdv/trajectory_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace rdv {

using nlohmann::json;
namespace fs = std::filesystem;

double sweep_dt(const Scenario& s, double k1, double k2) {
  double j_min = std::numeric_limits<double>::infinity();
  for (const auto& v : s.vehicles) {
    Eigen::SelfAdjointEigenSolver<Mat3d> es(v.params.inertia, Eigen::EigenvaluesOnly);
    j_min = std::min(j_min, es.eigenvalues()(0));
  }
  const double cap = 0.25 * j_min / (k1 * k1 * k2);
  const double dt = s.sim.dt;
  if (dt <= cap) return dt;
  return dt / std::ceil(dt / cap);
}

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::size_t> record_every;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Disturbance seed");
    app->add_option("--dt", dt, "Step size (s)");
    app->add_option("--t-final", t_final, "Run length (s)");
    app->add_option("--record-every", record_every, "Record every k-th step");
  }

  void apply(Scenario& s) const {
    if (seed) s.sim.seed = *seed;
    if (dt) s.sim.dt = *dt;
    if (t_final) s.sim.t_final = *t_final;
    if (record_every) s.sim.record_every = *record_every;
    try {
      s.sim.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

std::string stem(const std::string& name_or_path) {
  const fs::path p(name_or_path);
  return p.has_extension() ? p.stem().string() : p.filename().string();
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  err << extra.dump() << '\n';
}

Certification certify_or_throw(const Scenario& s, std::vector<std::string>* warnings = nullptr) {
  if (!s.graph.has_globally_reachable_node()) {
    throw CertificationError("sensor digraph has no globally reachable node");
  }
  const auto rcl = build_relative_closed_loop(s.consensus.build(s.graph));
  const Certification c = certify(rcl);
  if (!c.hurwitz) {
    std::ostringstream os;
    os << "relative closed loop is not Hurwitz (spectral abscissa " << c.spectral_abscissa << ")";
    throw CertificationError(os.str());
  }
  if (warnings) *warnings = s.control.warnings();
  return c;
}

json run_summary(const std::string& label, const Scenario& s, const MetricsReport& m) {
  return {{"run", label},
          {"k1", s.control.k1},
          {"k2", s.control.k2},
          {"seed", s.sim.seed},
          {"dt", s.sim.dt},
          {"steady_state_distance", m.steady_state_distance},
          {"max_peak_u", m.max_peak_u},
          {"max_peak_tau", m.max_peak_tau},
          {"max_rms_u", m.max_rms_u},
          {"max_rms_tau", m.max_rms_tau}};
}

std::vector<std::pair<double, double>> parse_gains(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw ConfigError("--gains: expected k1,k2 pairs separated by ';'");
    try {
      out.emplace_back(std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--gains: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--gains: no gain pairs given");
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed rendezvous simulator for underactuated rigid bodies", "rdv"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string scenario_name;
  std::string out_dir = ".";
  Overrides ov;

  auto* check = app.add_subcommand("check", "Graph reachability and consensus-gain certification");
  check->add_option("scenario", scenario_name, "Scenario file or bundled name")->required();

  auto* run = app.add_subcommand("run", "Simulate one scenario; write CSV and metrics JSON");
  run->add_option("scenario", scenario_name, "Scenario file or bundled name")->required();
  run->add_option("--out-dir", out_dir, "Output directory");
  bool run_monitor = false;
  run->add_flag("--monitor", run_monitor, "Add Lyapunov monitor columns (default monitor settings if absent)");
  ov.add_to(run);

  auto* sweep = app.add_subcommand("sweep", "Gain grid or seed batch, run concurrently");
  sweep->add_option("scenario", scenario_name, "Scenario file or bundled name")->required();
  sweep->add_option("--out-dir", out_dir, "Output directory");
  std::string gains_text;
  std::size_t seed_count = 0;
  std::size_t jobs = 0;
  bool write_runs = false;
  auto* gains_opt = sweep->add_option("--gains", gains_text, "Gain pairs, e.g. \"2,0.45;4,0.9;8,1.8\"");
  auto* seeds_opt = sweep->add_option("--seeds", seed_count, "Number of seeds, starting at the scenario seed");
  gains_opt->excludes(seeds_opt);
  sweep->add_option("--jobs", jobs, "Concurrent runs (default: hardware threads)");
  sweep->add_flag("--write-runs", write_runs, "Also write per-run CSV files");
  ov.add_to(sweep);

  auto* constants = app.add_subcommand("constants", "Sampled estimates of alpha* and M1..M5");
  constants->add_option("scenario", scenario_name, "Scenario file or bundled name")->required();
  constants->add_option("--out-dir", out_dir, "Output directory");
  std::size_t samples = 100000;
  std::uint64_t sample_seed = 0;
  constants->add_option("--samples", samples, "Number of shell samples");
  constants->add_option("--seed", sample_seed, "Sampling seed");

  auto* monitor = app.add_subcommand("monitor", "Decrease test of W along a recorded run");
  monitor->add_option("scenario", scenario_name, "Scenario the run was produced from")->required();
  std::string csv_path;
  monitor->add_option("--csv", csv_path, "Recorded run")->required()->check(CLI::ExistingFile);
  std::optional<double> delta;
  monitor->add_option("--delta", delta, "Sublevel threshold (default: calibrated)");
  monitor->add_option("--out-dir", out_dir, "Output directory");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "usage", e.what());
    return kExitConfig;
  }

  try {
    Scenario s = resolve_scenario(scenario_name);
    const std::string label = stem(scenario_name);

    if (*check) {
      std::vector<std::string> warnings;
      const auto rcl = build_relative_closed_loop(s.consensus.build(s.graph));
      const Certification c = certify(rcl);
      out << certification_json(s.graph, c, s.control.warnings());
      if (!s.graph.has_globally_reachable_node()) {
        error_json(err, "certification", "sensor digraph has no globally reachable node");
        return kExitCertification;
      }
      if (!c.hurwitz) {
        error_json(err, "certification", "relative closed loop is not Hurwitz");
        return kExitCertification;
      }
      return 0;
    }

    if (*run) {
      ov.apply(s);
      certify_or_throw(s);
      if (run_monitor && !s.monitor) s.monitor = MonitorConfig{};
      const Trajectory traj = rdv::run(s);
      const MetricsReport m = compute_metrics(traj);
      const fs::path dir = prepare_dir(out_dir);
      write_csv(dir / (label + ".csv"), traj);
      write_text(dir / (label + ".metrics.json"), metrics_json(m));
      out << run_summary(label, s, m).dump(2) << '\n';
      return 0;
    }

    if (*sweep) {
      ov.apply(s);
      certify_or_throw(s);
      std::vector<Scenario> runs;
      std::vector<std::string> labels;
      if (!gains_text.empty()) {
        for (auto [k1, k2] : parse_gains(gains_text)) {
          Scenario r = s;
          r.control = {k1, k2};
          try {
            r.control.validate();
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
          r.sim.dt = sweep_dt(s, k1, k2);
          std::ostringstream os;
          os << label << "_k1_" << k1 << "_k2_" << k2;
          runs.push_back(std::move(r));
          labels.push_back(os.str());
        }
      } else {
        const std::size_t count = seed_count ? seed_count : 10;
        for (std::size_t k = 0; k < count; ++k) {
          Scenario r = s;
          r.sim.seed = s.sim.seed + k;
          runs.push_back(std::move(r));
          labels.push_back(label + "_seed_" + std::to_string(s.sim.seed + k));
        }
      }

      const fs::path dir = prepare_dir(out_dir);
      std::vector<std::optional<MetricsReport>> results(runs.size());
      std::vector<std::exception_ptr> failures(runs.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t k = next++; k < runs.size(); k = next++) {
          try {
            const Trajectory traj = rdv::run(runs[k]);
            results[k] = compute_metrics(traj);
            write_text(dir / (labels[k] + ".metrics.json"), metrics_json(*results[k]));
            if (write_runs) write_csv(dir / (labels[k] + ".csv"), traj);
          } catch (...) {
            failures[k] = std::current_exception();
          }
        }
      };
      const std::size_t threads =
          std::max<std::size_t>(1, std::min(runs.size(), jobs ? jobs : std::thread::hardware_concurrency()));
      std::vector<std::thread> pool;
      for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }

      json report = json::array();
      for (std::size_t k = 0; k < runs.size(); ++k) report.push_back(run_summary(labels[k], runs[k], *results[k]));
      const std::string text = json{{"runs", report}}.dump(2) + "\n";
      write_text(dir / (label + ".sweep.json"), text);
      out << text;
      return 0;
    }

    if (*constants) {
      const auto rcl = build_relative_closed_loop(s.consensus.build(s.graph));
      if (!certify(rcl).hurwitz) throw CertificationError("relative closed loop is not Hurwitz");
      const LyapunovForm form = synthesize_P(rcl);
      const auto params = s.params();
      const ConstantsEstimate c = estimate_constants(rcl, form, params, samples, sample_seed);
      const std::string text = constants_json(c, s.control.warnings());
      write_text(prepare_dir(out_dir) / (label + ".constants.json"), text);
      out << text;
      return 0;
    }

    if (*monitor) {
      const Trajectory traj = read_csv(fs::path(csv_path));
      if (traj.vehicles() != s.size()) {
        throw ConfigError("recorded run has " + std::to_string(traj.vehicles()) + " vehicles, scenario has " +
                          std::to_string(s.size()));
      }
      MonitorConfig cfg = s.monitor.value_or(MonitorConfig{});
      if (delta) cfg.delta = *delta;
      if (!s.monitor) s.monitor = cfg;
      const LyapunovMonitor mon = make_monitor(s);
      std::vector<MonitorSample> samples_w;
      samples_w.reserve(traj.records());
      for (const auto& st : traj.states) samples_w.push_back(mon(st));
      const DecreaseReport r = decrease_test(traj.t, samples_w, cfg);
      const std::string text = decrease_json(r);
      write_text(prepare_dir(out_dir) / (stem(csv_path) + ".decrease.json"), text);
      out << text;
      return 0;
    }
  } catch (const ConfigError& e) {
    error_json(err, "config", e.what(), {{"problems", e.problems()}});
    return kExitConfig;
  } catch (const CertificationError& e) {
    error_json(err, "certification", e.what());
    return kExitCertification;
  } catch (const NumericalError& e) {
    error_json(err, "numerical", e.what(), {{"step", e.step()}, {"time", e.time()}});
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    error_json(err, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    error_json(err, "failure", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace rdv
