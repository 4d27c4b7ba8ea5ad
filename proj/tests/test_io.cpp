#include "rdv/trajectory_io.hpp"

#include "rdv/scenario.hpp"

#include <doctest.h>

#include <json.hpp>

#include <sstream>

using namespace rdv;

namespace {

Trajectory short_run(bool monitored, std::size_t record_every = 1) {
  Scenario s = *builtin_scenario("reference_disturbed");
  s.sim.t_final = 0.2;
  s.sim.record_every = record_every;
  if (monitored) {
    s.monitor = MonitorConfig{};
    s.monitor->alpha = 250.0;
  }
  return run(s);
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("header layout") {
    const auto h = csv_header(5, false);
    REQUIRE(h.size() == 1 + 5 * 22);
    CHECK(h[0] == "t");
    const std::vector<std::string> first(h.begin() + 1, h.begin() + 23);
    CHECK(first == std::vector<std::string>{"x_1",   "y_1",   "z_1",   "vx_1",  "vy_1",   "vz_1",
                                            "R11_1", "R12_1", "R13_1", "R21_1", "R22_1",  "R23_1",
                                            "R31_1", "R32_1", "R33_1", "wx_1",  "wy_1",   "wz_1",
                                            "u_1",   "taux_1", "tauy_1", "tauz_1"});
    CHECK(h.back() == "tauz_5");
    const auto m = csv_header(2, true);
    CHECK(m.back() == "gamma_dist");
    CHECK(m.size() == 1 + 2 * 22 + 5);
  }

  TEST_CASE("CSV round-trips exactly") {
    for (bool monitored : {false, true}) {
      const Trajectory tr = short_run(monitored);
      std::stringstream ss;
      write_csv(ss, tr);
      const Trajectory back = read_csv(ss);
      REQUIRE(back.records() == tr.records());
      REQUIRE(back.vehicles() == 5);
      CHECK(back.monitor.size() == tr.monitor.size());
      for (std::size_t k = 0; k < tr.records(); ++k) {
        CHECK(back.t[k] == tr.t[k]);
        for (std::size_t i = 0; i < 5; ++i) {
          CHECK(back.states[k][i].x == tr.states[k][i].x);
          CHECK(back.states[k][i].v == tr.states[k][i].v);
          CHECK(back.states[k][i].R == tr.states[k][i].R);
          CHECK(back.states[k][i].w_body == tr.states[k][i].w_body);
          CHECK(back.controls[k][i].u == tr.controls[k][i].u);
          CHECK(back.controls[k][i].tau == tr.controls[k][i].tau);
        }
        if (monitored) {
          CHECK(back.monitor[k].W == tr.monitor[k].W);
          CHECK(back.monitor[k].gamma_dist == tr.monitor[k].gamma_dist);
        }
      }
    }
  }

  TEST_CASE("time column has a uniform stride") {
    const Trajectory tr = short_run(false, 3);
    std::stringstream ss;
    write_csv(ss, tr);
    const Trajectory back = read_csv(ss);
    for (std::size_t k = 1; k < back.records(); ++k) {
      CHECK(back.t[k] > back.t[k - 1]);
      CHECK(back.t[k] - back.t[k - 1] == doctest::Approx(3e-3).epsilon(1e-9));
    }
  }

  TEST_CASE("bad CSV input names the problem") {
    std::stringstream empty;
    CHECK_THROWS_WITH_AS(read_csv(empty), "csv: missing header row", std::runtime_error);
    const auto h = csv_header(1, false);
    std::string header;
    for (const auto& c : h) header += (header.empty() ? "" : ",") + c;
    std::string renamed = header;
    renamed.replace(renamed.find("vy_1"), 4, "vq_1");
    std::stringstream a(renamed + "\n");
    CHECK_THROWS_WITH_AS(read_csv(a), "csv: column 6 is 'vq_1', expected 'vy_1'", std::runtime_error);
    std::stringstream b(header + "\n0,1,2\n");
    CHECK_THROWS_AS(read_csv(b), std::runtime_error);
    std::string row = "0";
    for (std::size_t c = 1; c < h.size(); ++c) row += c == 4 ? ",abc" : ",1";
    std::stringstream d(header + "\n" + row + "\n");
    CHECK_THROWS_WITH_AS(read_csv(d), "csv line 2: bad number in column 'vx_1'", std::runtime_error);
    std::stringstream e(header + "\n");
    CHECK(read_csv(e).records() == 0);
  }

  TEST_CASE("JSON reports parse") {
    const Trajectory tr = short_run(false);
    const auto m = nlohmann::json::parse(metrics_json(compute_metrics(tr)));
    CHECK(m["vehicles"].size() == 5);
    CHECK(m["rms_window"] == "whole run");
    CHECK(m["max_peak_u"].get<double>() > 0);

    const Scenario s = *builtin_scenario("reference");
    const auto rcl = build_relative_closed_loop(s.consensus.build(s.graph));
    const auto c = nlohmann::json::parse(certification_json(s.graph, certify(rcl), {}));
    CHECK(c["hurwitz"] == true);
    CHECK(c["globally_reachable_node"] == 1);
    CHECK(c["eigenvalues"].size() == 24);

    const auto est = estimate_constants(rcl, synthesize_P(rcl), s.params(), 1000, 0);
    const auto k = nlohmann::json::parse(constants_json(est, {"w"}));
    CHECK(k["kind"].get<std::string>().find("estimates") == 0);
    CHECK(k["alpha_star"]["witness"]["theta"].size() == 24);
    CHECK(k["M5"]["witness"]["R"].size() == 5);
  }
}
