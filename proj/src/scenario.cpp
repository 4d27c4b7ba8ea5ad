#include "rdv/scenario.hpp"

#include "rdv/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace rdv {

using nlohmann::json;

ConsensusLaw ConsensusSpec::build(const SensorDigraph& g) const {
  if (edges.empty()) return ConsensusLaw::ren_atkins(g, a, gamma);
  const auto n = Eigen::Index(g.size());
  Eigen::MatrixXd am = Eigen::MatrixXd::Zero(n, n), bm = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    if (!g.has_edge(e.from, e.to)) {
      throw ConfigError("consensus gain for (" + std::to_string(e.from + 1) + ", " + std::to_string(e.to + 1) +
                        ") which is not a graph edge");
    }
    am(Eigen::Index(e.from), Eigen::Index(e.to)) = e.a;
    bm(Eigen::Index(e.from), Eigen::Index(e.to)) = e.b;
  }
  for (const auto& [i, j] : g.edges()) {
    bool found = false;
    for (const auto& e : edges) found = found || (e.from == i && e.to == j);
    if (!found) throw ConfigError("graph edge (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ") has no gains");
  }
  return ConsensusLaw(g, std::move(am), std::move(bm));
}

ClosedLoop Scenario::closed_loop() const { return {params(), consensus.build(graph), control, world}; }

std::vector<VehicleState> Scenario::initial_states() const {
  std::vector<VehicleState> s;
  for (const auto& v : vehicles) s.push_back(v.initial);
  return s;
}

std::vector<VehicleParams> Scenario::params() const {
  std::vector<VehicleParams> p;
  for (const auto& v : vehicles) p.push_back(v.params);
  return p;
}

namespace {

bool same_opt(const std::optional<double>& a, const std::optional<double>& b) { return a == b; }

bool same(const MonitorConfig& a, const MonitorConfig& b) {
  return same_opt(a.alpha, b.alpha) && same_opt(a.delta, b.delta) && a.epsilon == b.epsilon && a.varrho == b.varrho &&
         a.sample_count == b.sample_count && a.seed == b.seed;
}

}  // namespace

bool equivalent(const Scenario& a, const Scenario& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& va = a.vehicles[i];
    const auto& vb = b.vehicles[i];
    if (va.params.mass != vb.params.mass || va.params.inertia != vb.params.inertia) return false;
    if (va.initial.x != vb.initial.x || va.initial.v != vb.initial.v || va.initial.R != vb.initial.R ||
        va.initial.w_body != vb.initial.w_body) {
      return false;
    }
  }
  const auto& sa = a.sim;
  const auto& sb = b.sim;
  if (sa.dt != sb.dt || sa.t_final != sb.t_final || sa.seed != sb.seed || sa.record_every != sb.record_every ||
      sa.continuous_control != sb.continuous_control || sa.disturbance != sb.disturbance) {
    return false;
  }
  if (a.monitor.has_value() != b.monitor.has_value()) return false;
  if (a.monitor && !same(*a.monitor, *b.monitor)) return false;
  return a.graph == b.graph && a.consensus == b.consensus && a.control.k1 == b.control.k1 &&
         a.control.k2 == b.control.k2 && a.world.gravity == b.world.gravity;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Reader {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& where, const std::string& what) { problems.push_back(where + ": " + what); }

  const json* child(const json& obj, const std::string& key, const std::string& where, bool required) {
    if (!obj.is_object()) {
      fail(where, "expected an object");
      return nullptr;
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(where + "." + key, "missing field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& where, bool required) {
    const json* j = child(obj, key, where, required);
    if (!j) return std::nullopt;
    if (!j->is_number()) {
      fail(where + "." + key, "expected a number");
      return std::nullopt;
    }
    const double v = j->get<double>();
    if (!std::isfinite(v)) {
      fail(where + "." + key, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::uint64_t> count(const json& obj, const std::string& key, const std::string& where) {
    const json* j = child(obj, key, where, false);
    if (!j) return std::nullopt;
    if (!j->is_number_unsigned()) {
      fail(where + "." + key, "expected a non-negative integer");
      return std::nullopt;
    }
    return j->get<std::uint64_t>();
  }

  std::optional<Vec3d> vec3(const json& obj, const std::string& key, const std::string& where, bool required) {
    const json* j = child(obj, key, where, required);
    if (!j) return std::nullopt;
    if (!j->is_array() || j->size() != 3) {
      fail(where + "." + key, "expected an array of 3 numbers");
      return std::nullopt;
    }
    Vec3d v;
    for (int k = 0; k < 3; ++k) {
      if (!(*j)[k].is_number()) {
        fail(where + "." + key, "expected an array of 3 numbers");
        return std::nullopt;
      }
      v(k) = (*j)[k].get<double>();
    }
    if (!v.allFinite()) {
      fail(where + "." + key, "entries must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<Mat3d> mat3(const json& obj, const std::string& key, const std::string& where, bool required) {
    const json* j = child(obj, key, where, required);
    if (!j) return std::nullopt;
    Mat3d m;
    bool ok = j->is_array() && j->size() == 3;
    for (int r = 0; ok && r < 3; ++r) {
      const json& row = (*j)[r];
      ok = row.is_array() && row.size() == 3;
      for (int c = 0; ok && c < 3; ++c) {
        ok = row[c].is_number();
        if (ok) m(r, c) = row[c].get<double>();
      }
    }
    if (!ok || !m.allFinite()) {
      fail(where + "." + key, "expected a 3x3 array of finite numbers");
      return std::nullopt;
    }
    return m;
  }
};

std::string matrix_text(const Mat3d& m) {
  std::ostringstream os;
  os << "[[" << m(0, 0) << "," << m(0, 1) << "," << m(0, 2) << "],[" << m(1, 0) << "," << m(1, 1) << "," << m(1, 2)
     << "],[" << m(2, 0) << "," << m(2, 1) << "," << m(2, 2) << "]]";
  return os.str();
}

std::optional<std::size_t> vehicle_key(const std::string& s, std::size_t n) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (...) {
    return std::nullopt;
  }
  if (pos != s.size() || v < 1 || v > n) return std::nullopt;
  return v - 1;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("scenario: top level must be an object");

  Reader rd;
  Scenario s;

  if (auto v = rd.child(root, "schema_version", "scenario", true)) {
    if (!v->is_number_integer() || v->get<int>() != kSchemaVersion) {
      rd.fail("scenario.schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }

  // Vehicles.
  if (const json* vs = rd.child(root, "vehicles", "scenario", true)) {
    if (!vs->is_array() || vs->empty()) {
      rd.fail("scenario.vehicles", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < vs->size(); ++i) {
        const std::string where = "vehicles[" + std::to_string(i + 1) + "]";
        const json& vj = (*vs)[i];
        VehicleSetup v;
        if (auto m = rd.number(vj, "m", where, true)) v.params.mass = *m;
        if (auto J = rd.mat3(vj, "J", where, true)) v.params.inertia = *J;
        try {
          v.params.validate();
        } catch (const std::invalid_argument& e) {
          rd.fail(where, e.what());
        }
        if (auto x = rd.vec3(vj, "x", where, true)) v.initial.x = *x;
        if (auto vel = rd.vec3(vj, "v", where, false)) v.initial.v = *vel;
        if (auto w = rd.vec3(vj, "w", where, false)) v.initial.w_body = *w;
        if (auto R = rd.mat3(vj, "R", where, false)) {
          if (!is_rotation(*R)) {
            rd.fail(where + ".R", "not in SO(3) (|R^T R - I| = " + std::to_string(orthogonality_error(*R)) +
                                      ", det = " + std::to_string(R->determinant()) + "): " + matrix_text(*R));
          }
          v.initial.R = *R;
        }
        s.vehicles.push_back(v);
      }
    }
  }
  const std::size_t n = s.vehicles.size();

  // Graph.
  std::vector<SensorDigraph::Edge> edges;
  if (const json* gj = rd.child(root, "graph", "scenario", n > 1)) {
    if (!gj->is_object()) {
      rd.fail("scenario.graph", "expected an adjacency object");
    } else {
      for (auto it = gj->begin(); it != gj->end(); ++it) {
        const std::string where = "graph." + it.key();
        auto from = vehicle_key(it.key(), n);
        if (!from) {
          rd.fail(where, "key must be a vehicle index in 1.." + std::to_string(n));
          continue;
        }
        if (!it->is_array()) {
          rd.fail(where, "expected an array of vehicle indices");
          continue;
        }
        for (const auto& tj : *it) {
          if (!tj.is_number_integer() || tj.get<long long>() < 1 || std::size_t(tj.get<long long>()) > n) {
            rd.fail(where, "neighbor " + tj.dump() + " is not a vehicle index in 1.." + std::to_string(n));
            continue;
          }
          edges.emplace_back(*from, std::size_t(tj.get<long long>() - 1));
        }
      }
    }
  }
  if (n > 0) {
    try {
      s.graph = SensorDigraph(n, edges);
    } catch (const std::invalid_argument& e) {
      rd.fail("scenario.graph", e.what());
    }
  }

  // Consensus.
  if (const json* cj = rd.child(root, "consensus", "scenario", false)) {
    if (auto ej = rd.child(*cj, "edges", "consensus", false)) {
      if (!ej->is_array()) rd.fail("consensus.edges", "expected an array");
      else {
        for (std::size_t k = 0; k < ej->size(); ++k) {
          const std::string where = "consensus.edges[" + std::to_string(k + 1) + "]";
          const json& e = (*ej)[k];
          auto from = rd.number(e, "from", where, true);
          auto to = rd.number(e, "to", where, true);
          auto a = rd.number(e, "a", where, true);
          auto b = rd.number(e, "b", where, true);
          if (!(from && to && a && b)) continue;
          if (*from < 1 || *from > double(n) || *to < 1 || *to > double(n)) {
            rd.fail(where, "vehicle index out of range");
            continue;
          }
          s.consensus.edges.push_back({std::size_t(*from) - 1, std::size_t(*to) - 1, *a, *b});
        }
      }
    } else {
      if (auto a = rd.number(*cj, "a", "consensus", false)) s.consensus.a = *a;
      if (auto g = rd.number(*cj, "gamma", "consensus", false)) s.consensus.gamma = *g;
    }
  }
  if (rd.problems.empty()) {
    try {
      (void)s.consensus.build(s.graph);
    } catch (const std::invalid_argument& e) {
      rd.fail("scenario.consensus", e.what());
    }
  }

  // Control and world.
  if (const json* kj = rd.child(root, "control", "scenario", false)) {
    if (auto k1 = rd.number(*kj, "k1", "control", false)) s.control.k1 = *k1;
    if (auto k2 = rd.number(*kj, "k2", "control", false)) s.control.k2 = *k2;
  }
  try {
    s.control.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail("scenario.control", e.what());
  }
  if (const json* wj = rd.child(root, "world", "scenario", false)) {
    if (auto g = rd.vec3(*wj, "gravity", "world", false)) s.world.gravity = *g;
  }

  // Simulation.
  if (const json* sj = rd.child(root, "sim", "scenario", false)) {
    if (auto dt = rd.number(*sj, "dt", "sim", false)) s.sim.dt = *dt;
    if (auto tf = rd.number(*sj, "t_final", "sim", false)) s.sim.t_final = *tf;
    if (auto seed = rd.count(*sj, "seed", "sim")) s.sim.seed = *seed;
    if (auto re = rd.count(*sj, "record_every", "sim")) s.sim.record_every = *re;
    if (const json* cc = rd.child(*sj, "continuous_control", "sim", false)) {
      if (cc->is_boolean()) s.sim.continuous_control = cc->get<bool>();
      else rd.fail("sim.continuous_control", "expected a boolean");
    }
    if (const json* dj = rd.child(*sj, "disturbance", "sim", false); dj && !dj->is_null()) {
      DisturbanceSpec d;
      if (auto v = rd.number(*dj, "force_max", "sim.disturbance", false)) d.force_max = *v;
      if (auto v = rd.number(*dj, "torque_max", "sim.disturbance", false)) d.torque_max = *v;
      if (auto v = rd.number(*dj, "gyro_max", "sim.disturbance", false)) d.gyro_max = *v;
      if (auto v = rd.number(*dj, "f_angle_max", "sim.disturbance", false)) d.f_angle_max = *v;
      if (auto v = rd.number(*dj, "update_hz", "sim.disturbance", false)) d.update_hz = *v;
      if (const json* r = rd.child(*dj, "f_scale_range", "sim.disturbance", false)) {
        if (r->is_array() && r->size() == 2 && (*r)[0].is_number() && (*r)[1].is_number()) {
          d.f_scale_range = {(*r)[0].get<double>(), (*r)[1].get<double>()};
        } else {
          rd.fail("sim.disturbance.f_scale_range", "expected [lower, upper]");
        }
      }
      s.sim.disturbance = d;
    }
  }
  try {
    s.sim.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail("scenario.sim", e.what());
  }

  // Monitor.
  if (const json* mj = rd.child(root, "monitor", "scenario", false); mj && !mj->is_null()) {
    MonitorConfig m;
    m.alpha = rd.number(*mj, "alpha", "monitor", false);
    m.delta = rd.number(*mj, "delta", "monitor", false);
    if (auto v = rd.number(*mj, "epsilon", "monitor", false)) m.epsilon = *v;
    if (auto v = rd.number(*mj, "varrho", "monitor", false)) m.varrho = *v;
    if (auto v = rd.count(*mj, "sample_count", "monitor")) m.sample_count = *v;
    if (auto v = rd.count(*mj, "seed", "monitor")) m.seed = *v;
    try {
      m.validate();
    } catch (const std::invalid_argument& e) {
      rd.fail("scenario.monitor", e.what());
    }
    s.monitor = m;
  }

  if (!rd.problems.empty()) throw ConfigError(rd.problems);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

json to_json(const Vec3d& v) { return json::array({v(0), v(1), v(2)}); }
json to_json(const Mat3d& m) {
  return json::array({json::array({m(0, 0), m(0, 1), m(0, 2)}), json::array({m(1, 0), m(1, 1), m(1, 2)}),
                      json::array({m(2, 0), m(2, 1), m(2, 2)})});
}

}  // namespace

std::string emit_scenario(const Scenario& s) {
  json root;
  root["schema_version"] = kSchemaVersion;
  json vs = json::array();
  for (const auto& v : s.vehicles) {
    vs.push_back({{"m", v.params.mass},
                  {"J", to_json(v.params.inertia)},
                  {"x", to_json(v.initial.x)},
                  {"v", to_json(v.initial.v)},
                  {"R", to_json(v.initial.R)},
                  {"w", to_json(v.initial.w_body)}});
  }
  root["vehicles"] = vs;
  json g = json::object();
  for (std::size_t i = 0; i < s.graph.size(); ++i) {
    json nb = json::array();
    for (std::size_t j : s.graph.neighbors(i)) nb.push_back(j + 1);
    g[std::to_string(i + 1)] = nb;
  }
  root["graph"] = g;
  if (s.consensus.edges.empty()) {
    root["consensus"] = {{"a", s.consensus.a}, {"gamma", s.consensus.gamma}};
  } else {
    json e = json::array();
    for (const auto& eg : s.consensus.edges) {
      e.push_back({{"from", eg.from + 1}, {"to", eg.to + 1}, {"a", eg.a}, {"b", eg.b}});
    }
    root["consensus"] = {{"edges", e}};
  }
  root["control"] = {{"k1", s.control.k1}, {"k2", s.control.k2}};
  root["world"] = {{"gravity", to_json(s.world.gravity)}};
  json sim = {{"dt", s.sim.dt},
              {"t_final", s.sim.t_final},
              {"seed", s.sim.seed},
              {"record_every", s.sim.record_every},
              {"continuous_control", s.sim.continuous_control}};
  if (s.sim.disturbance) {
    const auto& d = *s.sim.disturbance;
    sim["disturbance"] = {{"force_max", d.force_max},     {"torque_max", d.torque_max},
                          {"gyro_max", d.gyro_max},       {"f_angle_max", d.f_angle_max},
                          {"f_scale_range", {d.f_scale_range[0], d.f_scale_range[1]}},
                          {"update_hz", d.update_hz}};
  } else {
    sim["disturbance"] = nullptr;
  }
  root["sim"] = sim;
  if (s.monitor) {
    const auto& m = *s.monitor;
    json mj = {{"epsilon", m.epsilon}, {"varrho", m.varrho}, {"sample_count", m.sample_count}, {"seed", m.seed}};
    if (m.alpha) mj["alpha"] = *m.alpha;
    if (m.delta) mj["delta"] = *m.delta;
    root["monitor"] = mj;
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Bundled scenarios

namespace {

Scenario reference_experiment() {
  Scenario s;
  const Mat3d J1 = Vec3d(0.13, 0.13, 0.04).asDiagonal();
  const double mass[5] = {3.0, 3.0, 3.4, 3.2, 3.2};
  const double inertia_scale[5] = {1.0, 1.0, 1.4, 1.2, 1.2};
  const Vec3d position[5] = {{0, -10, 10}, {0, 10, 10}, {0, 0, 0}, {-10, 0, -10}, {10, 0, -10}};

  Mat3d up = Mat3d::Identity();
  Mat3d side1, side2, down;
  side1 << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  side2 << 1, 0, 0, 0, 0, 1, 0, -1, 0;
  down << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  const Mat3d attitude[5] = {side1, side2, down, up, up};

  for (int i = 0; i < 5; ++i) {
    VehicleSetup v;
    v.params.mass = mass[i];
    v.params.inertia = inertia_scale[i] * J1;
    v.initial.x = position[i];
    v.initial.R = attitude[i];
    s.vehicles.push_back(v);
  }
  s.graph = reference_digraph();
  s.consensus = {0.3, 30.0, {}};
  s.control = {2.0, 0.45};
  s.sim.dt = 1e-3;
  s.sim.t_final = 60.0;
  return s;
}

}  // namespace

std::optional<Scenario> builtin_scenario(const std::string& name) {
  if (name == "reference") return reference_experiment();
  if (name == "reference_disturbed") {
    Scenario s = reference_experiment();
    s.sim.disturbance = DisturbanceSpec{};
    return s;
  }
  return std::nullopt;
}

std::vector<std::string> builtin_scenario_names() { return {"reference", "reference_disturbed"}; }

Scenario resolve_scenario(const std::string& name_or_path) {
  if (std::filesystem::is_regular_file(name_or_path)) return load_scenario(name_or_path);
  if (auto s = builtin_scenario(name_or_path)) return *s;
  throw ConfigError("no scenario file or bundled scenario named '" + name_or_path + "'");
}

LyapunovMonitor make_monitor(const Scenario& s) {
  const MonitorConfig cfg = s.monitor.value_or(MonitorConfig{});
  RelativeClosedLoop rcl = build_relative_closed_loop(s.consensus.build(s.graph));
  if (!certify(rcl).hurwitz) throw CertificationError("consensus law is not certified; no Lyapunov form exists");
  LyapunovForm form = synthesize_P(rcl);
  const double alpha = cfg.alpha ? *cfg.alpha : 1.1 * estimate_alpha_star(rcl, form, cfg.sample_count, cfg.seed).value;
  return LyapunovMonitor(std::move(rcl), std::move(form), s.control, s.params(), alpha);
}

Trajectory run(const Scenario& s) {
  const ClosedLoop sys = s.closed_loop();
  MonitorFn fn;
  if (s.monitor) {
    auto mon = std::make_shared<LyapunovMonitor>(make_monitor(s));
    fn = [mon](std::span<const VehicleState> st) { return (*mon)(st); };
  }
  return simulate(sys, s.initial_states(), s.sim, fn);
}

}  // namespace rdv
