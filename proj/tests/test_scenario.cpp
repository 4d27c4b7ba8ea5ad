#include "rdv/scenario.hpp"

#include "rdv/errors.hpp"

#include <doctest.h>

#include <json.hpp>

#include <filesystem>

using namespace rdv;
using nlohmann::json;

namespace {

json reference_json() { return json::parse(emit_scenario(*builtin_scenario("reference"))); }

std::vector<std::string> problems_of(const json& j) {
  try {
    parse_scenario(j.dump());
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& what) {
  for (const auto& p : problems) {
    if (p.find(what) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("bundled reference scenario matches the reference setup") {
    const Scenario s = *builtin_scenario("reference");
    REQUIRE(s.size() == 5);
    const double mass[] = {3, 3, 3.4, 3.2, 3.2};
    const Vec3d x[] = {{0, -10, 10}, {0, 10, 10}, {0, 0, 0}, {-10, 0, -10}, {10, 0, -10}};
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(s.vehicles[i].params.mass == mass[i]);
      CHECK(s.vehicles[i].initial.x == x[i]);
      CHECK(s.vehicles[i].initial.v == Vec3d::Zero());
      CHECK(is_rotation(s.vehicles[i].initial.R));
    }
    const Mat3d J1 = Vec3d(0.13, 0.13, 0.04).asDiagonal();
    CHECK(s.vehicles[0].params.inertia == J1);
    CHECK(s.vehicles[1].params.inertia == J1);
    CHECK(s.vehicles[2].params.inertia.isApprox(1.4 * J1));
    CHECK(s.vehicles[3].params.inertia.isApprox(1.2 * J1));
    CHECK(s.vehicles[4].params.inertia.isApprox(1.2 * J1));
    CHECK(s.graph == reference_digraph());
    CHECK(s.consensus.a == 0.3);
    CHECK(s.consensus.gamma == 30.0);
    CHECK(s.control.k1 == 2.0);
    CHECK(s.control.k2 == 0.45);
    CHECK(s.world.gravity == Vec3d::Zero());
    CHECK_FALSE(s.sim.disturbance.has_value());
    CHECK(builtin_scenario("reference_disturbed")->sim.disturbance == DisturbanceSpec{});
    CHECK_FALSE(builtin_scenario("nope").has_value());
  }

  TEST_CASE("bundled files equal the built-in scenarios") {
    for (const auto& name : builtin_scenario_names()) {
      const auto path = std::filesystem::path(RDV_SCENARIO_DIR) / (name + ".json");
      CHECK(equivalent(load_scenario(path), *builtin_scenario(name)));
      CHECK(equivalent(resolve_scenario(path.string()), *builtin_scenario(name)));
      CHECK(equivalent(resolve_scenario(name), *builtin_scenario(name)));
    }
  }

  TEST_CASE("emit and parse round-trip") {
    Scenario s = *builtin_scenario("reference_disturbed");
    s.sim.seed = 17;
    s.sim.record_every = 4;
    s.world.gravity = Vec3d(0, 0, 9.81);
    s.vehicles[1].initial.w_body = Vec3d(0.1, -0.2, 0.3);
    s.vehicles[2].initial.v = Vec3d(1.0 / 3.0, 0, 0);
    s.monitor = MonitorConfig{};
    s.monitor->alpha = 250.0;
    CHECK(equivalent(parse_scenario(emit_scenario(s)), s));

    s.consensus.edges.clear();
    for (const auto& [i, j] : s.graph.edges()) s.consensus.edges.push_back({i, j, 0.1 + double(i), 2.0 + double(j)});
    const Scenario back = parse_scenario(emit_scenario(s));
    CHECK(equivalent(back, s));
    CHECK(back.consensus.build(back.graph).a(0, 2) == doctest::Approx(0.1));
    CHECK(back.consensus.build(back.graph).b(2, 3) == doctest::Approx(5.0));
  }

  TEST_CASE("defaults fill missing optional fields") {
    json j = reference_json();
    j.erase("control");
    j.erase("sim");
    j.erase("consensus");
    j.erase("world");
    for (auto& v : j["vehicles"]) v.erase("R"), v.erase("v"), v.erase("w");
    const Scenario s = parse_scenario(j.dump());
    CHECK(s.control.k1 == 2.0);
    CHECK(s.sim.dt == 1e-3);
    CHECK(s.sim.t_final == 60.0);
    CHECK(s.vehicles[2].initial.R == Mat3d::Identity());
  }

  TEST_CASE("reflection attitude is rejected with the matrix echoed") {
    json j = reference_json();
    j["vehicles"][1]["R"] = {{1, 0, 0}, {0, -1, 0}, {0, 0, 1}};
    const auto p = problems_of(j);
    REQUIRE(p.size() == 1);
    CHECK(mentions(p, "vehicles[2].R"));
    CHECK(mentions(p, "SO(3)"));
    CHECK(mentions(p, "[[1,0,0],[0,-1,0],[0,0,1]]"));
  }

  TEST_CASE("graph key beyond the vehicle count is rejected") {
    json j = reference_json();
    j["graph"]["6"] = {1};
    CHECK(mentions(problems_of(j), "graph.6"));
    j = reference_json();
    j["graph"]["2"] = {7};
    CHECK(mentions(problems_of(j), "graph.2"));
    j = reference_json();
    j["graph"]["2"] = {2};
    CHECK(mentions(problems_of(j), "self-loop"));
  }

  TEST_CASE("all problems are reported together") {
    json j = reference_json();
    j["vehicles"][0].erase("m");
    j["vehicles"][3]["J"] = {{1, 0}, {0, 1}};
    j["vehicles"][4]["x"] = {1, 2};
    j["control"]["k2"] = -1;
    j["sim"]["dt"] = 0.5;
    j["schema_version"] = 7;
    const auto p = problems_of(j);
    CHECK(p.size() >= 6);
    CHECK(mentions(p, "vehicles[1].m"));
    CHECK(mentions(p, "vehicles[4].J"));
    CHECK(mentions(p, "vehicles[5].x"));
    CHECK(mentions(p, "control"));
    CHECK(mentions(p, "sim"));
    CHECK(mentions(p, "schema_version"));
  }

  TEST_CASE("malformed input") {
    CHECK_THROWS_AS(parse_scenario("{ not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("{\"schema_version\": 1}"), ConfigError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/file.json"), ConfigError);
    CHECK_THROWS_AS(resolve_scenario("no_such_scenario"), ConfigError);
    json j = reference_json();
    j["consensus"] = {{"edges", {{{"from", 1}, {"to", 2}, {"a", 1.0}, {"b", 1.0}}}}};
    CHECK(mentions(problems_of(j), "consensus"));
  }

  TEST_CASE("run with a monitor block records W") {
    Scenario s = *builtin_scenario("reference");
    s.sim.t_final = 0.5;
    s.sim.record_every = 50;
    s.monitor = MonitorConfig{};
    s.monitor->alpha = 300.0;
    const Trajectory tr = run(s);
    REQUIRE(tr.monitor.size() == tr.records());
    CHECK(tr.monitor.front().alpha == 300.0);
    CHECK(tr.monitor.front().W > 0.0);
    const auto mon = make_monitor(s);
    CHECK(mon(tr.states.back()).W == tr.monitor.back().W);
  }
}
