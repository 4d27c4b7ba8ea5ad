#pragma once

// CSV and JSON emission. The CSV has a mandatory header row:
//
//   t, then per vehicle k (1-based suffix):
//     x_k y_k z_k vx_k vy_k vz_k R11_k .. R33_k (row-major) wx_k wy_k wz_k u_k taux_k tauy_k tauz_k
//   then, for monitored runs: V W_tran W_rot W gamma_dist
//
// Numbers use the shortest round-trip representation, so output is
// byte-identical for identical runs.

#include "rdv/consensus.hpp"
#include "rdv/metrics.hpp"
#include "rdv/monitor.hpp"
#include "rdv/sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rdv {

std::vector<std::string> csv_header(std::size_t vehicles, bool monitored);

void write_csv(std::ostream& out, const Trajectory& traj);
void write_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Reads a CSV written by write_csv. Monitor columns, if present, fill only
/// V, W_tran, W_rot, W and gamma_dist. Throws std::runtime_error naming the
/// offending line or column.
Trajectory read_csv(std::istream& in);
Trajectory read_csv(const std::filesystem::path& path);

std::string metrics_json(const MetricsReport& m);
std::string constants_json(const ConstantsEstimate& c, const std::vector<std::string>& warnings);
std::string certification_json(const SensorDigraph& g, const Certification& c, const std::vector<std::string>& warnings);
std::string decrease_json(const DecreaseReport& r);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rdv
