#pragma once

// Command-line surface: check, run, sweep, constants, monitor.
//
// Exit codes: 0 success, 1 I/O or other failure, 2 configuration or usage
// error, 3 certification failure, 4 numerical abort. On failure a JSON
// object {"error": kind, "message": ...} is written to the error stream.

#include "rdv/scenario.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rdv {

inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCertification = 3;
inline constexpr int kExitNumerical = 4;

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Step size used by `sweep` for gains (k1, k2): dt shrunk by an integer
/// factor until dt * k1^2 k2 / lambda_min(J) <= 0.25 for every vehicle, so
/// the held-torque rotational mode stays well inside its stability limit.
double sweep_dt(const Scenario& s, double k1, double k2);

}  // namespace rdv
