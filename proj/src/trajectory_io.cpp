#include "rdv/trajectory_io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace rdv {

using nlohmann::json;

namespace {

constexpr const char* kVehicleColumns[] = {"x",   "y",   "z",   "vx",  "vy",  "vz",  "R11", "R12",
                                           "R13", "R21", "R22", "R23", "R31", "R32", "R33", "wx",
                                           "wy",  "wz",  "u",   "taux", "tauy", "tauz"};
constexpr std::size_t kPerVehicle = std::size(kVehicleColumns);
constexpr const char* kMonitorColumns[] = {"V", "W_tran", "W_rot", "W", "gamma_dist"};
constexpr std::size_t kMonitor = std::size(kMonitorColumns);

void put(std::string& line, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.push_back(',');
  line.append(buf, res.ptr);
}

}  // namespace

std::vector<std::string> csv_header(std::size_t vehicles, bool monitored) {
  std::vector<std::string> h{"t"};
  for (std::size_t k = 1; k <= vehicles; ++k) {
    for (const char* c : kVehicleColumns) h.push_back(std::string(c) + "_" + std::to_string(k));
  }
  if (monitored) {
    for (const char* c : kMonitorColumns) h.emplace_back(c);
  }
  return h;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  const bool monitored = !traj.monitor.empty();
  const auto header = csv_header(traj.vehicles(), monitored);
  std::string line;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) line.push_back(',');
    line += header[c];
  }
  out << line << '\n';
  for (std::size_t k = 0; k < traj.records(); ++k) {
    char buf[32];
    line.assign(buf, std::to_chars(buf, buf + sizeof buf, traj.t[k]).ptr);
    for (std::size_t i = 0; i < traj.vehicles(); ++i) {
      const auto& s = traj.states[k][i];
      const auto& c = traj.controls[k][i];
      for (int a = 0; a < 3; ++a) put(line, s.x(a));
      for (int a = 0; a < 3; ++a) put(line, s.v(a));
      for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) put(line, s.R(r, col));
      }
      for (int a = 0; a < 3; ++a) put(line, s.w_body(a));
      put(line, c.u);
      for (int a = 0; a < 3; ++a) put(line, c.tau(a));
    }
    if (monitored) {
      const auto& m = traj.monitor[k];
      for (double v : {m.V, m.W_tran, m.W_rot, m.W, m.gamma_dist}) put(line, v);
    }
    out << line << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, traj);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header row");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "t") throw std::runtime_error("csv: first column must be 't'");
  const std::size_t rest = header.size() - 1;
  const bool monitored = rest % kPerVehicle == kMonitor % kPerVehicle && rest >= kMonitor &&
                         header.back() == kMonitorColumns[kMonitor - 1];
  const std::size_t n = (rest - (monitored ? kMonitor : 0)) / kPerVehicle;
  const auto expected = csv_header(n, monitored);
  if (expected != header) {
    for (std::size_t c = 0; c < std::min(expected.size(), header.size()); ++c) {
      if (expected[c] != header[c]) {
        throw std::runtime_error("csv: column " + std::to_string(c + 1) + " is '" + header[c] + "', expected '" +
                                 expected[c] + "'");
      }
    }
    throw std::runtime_error("csv: header has " + std::to_string(header.size()) + " columns, expected " +
                             std::to_string(expected.size()));
  }

  Trajectory traj;
  std::vector<double> row(header.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (std::size_t c = 0; c < row.size(); ++c) {
      auto res = std::from_chars(p, end, row[c]);
      if (res.ec != std::errc{}) {
        throw std::runtime_error("csv line " + std::to_string(lineno) + ": bad number in column '" + header[c] + "'");
      }
      p = res.ptr;
      const bool last = c + 1 == row.size();
      if (last ? p != end : (p == end || *p != ',')) {
        throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " + std::to_string(row.size()) +
                                 " fields");
      }
      if (!last) ++p;
    }
    traj.t.push_back(row[0]);
    std::vector<VehicleState> states(n);
    std::vector<ControlOutput> controls(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* v = row.data() + 1 + i * kPerVehicle;
      states[i].x = Vec3d(v[0], v[1], v[2]);
      states[i].v = Vec3d(v[3], v[4], v[5]);
      for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) states[i].R(r, col) = v[6 + 3 * r + col];
      }
      states[i].w_body = Vec3d(v[15], v[16], v[17]);
      controls[i].u = v[18];
      controls[i].tau = Vec3d(v[19], v[20], v[21]);
    }
    traj.states.push_back(std::move(states));
    traj.controls.push_back(std::move(controls));
    if (monitored) {
      const double* v = row.data() + 1 + n * kPerVehicle;
      MonitorSample m;
      m.V = v[0];
      m.W_tran = v[1];
      m.W_rot = v[2];
      m.W = v[3];
      m.gamma_dist = v[4];
      m.rho = std::sqrt(std::max(0.0, m.V));
      traj.monitor.push_back(std::move(m));
    }
  }
  return traj;
}

Trajectory read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_csv(in);
}

namespace {

json sampled(const SampledMax& s) {
  if (!s.found) return {{"value", nullptr}};
  json R = json::array();
  for (const auto& r : s.R) {
    R.push_back(json::array({json::array({r(0, 0), r(0, 1), r(0, 2)}), json::array({r(1, 0), r(1, 1), r(1, 2)}),
                             json::array({r(2, 0), r(2, 1), r(2, 2)})}));
  }
  return {{"value", s.value},
          {"witness",
           {{"sample_index", s.sample_index},
            {"vehicle", s.vehicle + 1},
            {"theta", std::vector<double>(s.theta.data(), s.theta.data() + s.theta.size())},
            {"R", R}}}};
}

}  // namespace

std::string metrics_json(const MetricsReport& m) {
  json v = json::array();
  for (std::size_t i = 0; i < m.vehicles.size(); ++i) {
    const auto& x = m.vehicles[i];
    v.push_back({{"vehicle", i + 1},
                 {"peak_u", x.peak_u},
                 {"peak_tau", x.peak_tau},
                 {"rms_u", x.rms_u},
                 {"rms_tau", x.rms_tau},
                 {"terminal_speed", x.terminal_speed}});
  }
  json j = {{"vehicles", v},
            {"max_peak_u", m.max_peak_u},
            {"max_peak_tau", m.max_peak_tau},
            {"max_rms_u", m.max_rms_u},
            {"max_rms_tau", m.max_rms_tau},
            {"rms_window", "whole run"},
            {"steady_state_window_fraction", m.steady_state_window},
            {"steady_state_distance", m.steady_state_distance},
            {"initial_distance", m.initial_distance},
            {"final_distance", m.final_distance}};
  return j.dump(2) + "\n";
}

std::string constants_json(const ConstantsEstimate& c, const std::vector<std::string>& warnings) {
  json j = {{"kind", "estimates (sampled lower bounds, not certified bounds)"},
            {"sample_count", c.sample_count},
            {"seed", c.seed},
            {"alpha_star", sampled(c.alpha_star)},
            {"M1", sampled(c.M1)},
            {"M2", c.M2},
            {"M3", sampled(c.M3)},
            {"M4", sampled(c.M4)},
            {"M5", sampled(c.M5)},
            {"warnings", warnings}};
  return j.dump(2) + "\n";
}

std::string certification_json(const SensorDigraph& g, const Certification& c,
                               const std::vector<std::string>& warnings) {
  json eig = json::array();
  for (Eigen::Index k = 0; k < c.eigenvalues.size(); ++k) {
    eig.push_back({c.eigenvalues(k).real(), c.eigenvalues(k).imag()});
  }
  json j = {{"vehicles", g.size()},
            {"globally_reachable_node", nullptr},
            {"hurwitz", c.hurwitz},
            {"spectral_abscissa", c.spectral_abscissa},
            {"eigenvalues", eig},
            {"warnings", warnings}};
  if (auto r = g.globally_reachable_node()) j["globally_reachable_node"] = *r + 1;
  return j.dump(2) + "\n";
}

std::string decrease_json(const DecreaseReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) {
    v.push_back({{"index", x.index}, {"t0", x.t0}, {"t1", x.t1}, {"W0", x.W0}, {"increase", x.increase}});
  }
  json j = {{"delta", r.delta},
            {"delta_calibrated", r.delta_calibrated},
            {"intervals", r.intervals},
            {"violations", v},
            {"violations_after_first", r.violations_after_first()}};
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace rdv
