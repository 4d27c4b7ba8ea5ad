#pragma once

// Scenario description, JSON (de)serialization and the bundled experiments.
//
// Schema (schema_version 1), vehicle indices 1-based:
//
//   {
//     "schema_version": 1,
//     "vehicles": [ { "m": 3.0, "J": [[..],[..],[..]],
//                     "x": [..], "v": [..], "R": [[..],[..],[..]], "w": [..] } ],
//     "graph": { "1": [3], "2": [3], ... },
//     "consensus": { "a": 0.3, "gamma": 30.0 }
//               or { "edges": [ { "from": 1, "to": 3, "a": 0.3, "b": 9.0 } ] },
//     "control": { "k1": 2.0, "k2": 0.45 },
//     "world": { "gravity": [0, 0, 0] },
//     "sim": { "dt": 0.001, "t_final": 60, "seed": 0, "record_every": 1,
//              "continuous_control": false,
//              "disturbance": { "force_max": 0.25, ... } },
//     "monitor": { "alpha": .., "delta": .., "epsilon": .., "varrho": ..,
//                  "sample_count": .., "seed": .. }
//   }
//
// Missing optional fields take the reference-experiment values.

#include "rdv/consensus.hpp"
#include "rdv/control.hpp"
#include "rdv/monitor.hpp"
#include "rdv/sim.hpp"
#include "rdv/vehicle.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rdv {

inline constexpr int kSchemaVersion = 1;

struct VehicleSetup {
  VehicleParams params;
  VehicleState initial;
};

struct EdgeGain {
  std::size_t from = 0;  // 0-based
  std::size_t to = 0;
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const EdgeGain&, const EdgeGain&) = default;
};

struct ConsensusSpec {
  // Ren-Atkins form unless `edges` is non-empty.
  double a = 0.3;
  double gamma = 30.0;
  std::vector<EdgeGain> edges;

  ConsensusLaw build(const SensorDigraph& g) const;
  friend bool operator==(const ConsensusSpec&, const ConsensusSpec&) = default;
};

struct Scenario {
  std::vector<VehicleSetup> vehicles;
  SensorDigraph graph{1, {}};
  ConsensusSpec consensus;
  ControlGains control;
  WorldConfig world;
  SimConfig sim;
  std::optional<MonitorConfig> monitor;

  std::size_t size() const { return vehicles.size(); }
  ClosedLoop closed_loop() const;
  std::vector<VehicleState> initial_states() const;
  std::vector<VehicleParams> params() const;
};

bool equivalent(const Scenario& a, const Scenario& b);

/// Throws ConfigError listing every problem found.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string emit_scenario(const Scenario& s);

/// "reference" (no disturbance) or "reference_disturbed" (default disturbances).
std::optional<Scenario> builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

/// A path to an existing file or the name of a bundled scenario.
Scenario resolve_scenario(const std::string& name_or_path);

/// Runs a scenario. When a monitor block is present, every recorded step
/// carries a MonitorSample; alpha defaults to 1.1 x the sampled alpha*.
Trajectory run(const Scenario& s);

/// Monitor built from a scenario (the same one run() uses).
LyapunovMonitor make_monitor(const Scenario& s);

}  // namespace rdv
