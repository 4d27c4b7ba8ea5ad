#pragma once

// Control-effort and rendezvous metrics over a recorded trajectory.
// Peaks are discrete maxima over recorded steps, rms is taken over the whole
// run, and the steady-state window is the final fraction of the time span.

#include "rdv/sim.hpp"

#include <span>
#include <vector>

namespace rdv {

struct VehicleMetrics {
  double peak_u = 0.0;
  double peak_tau = 0.0;
  double rms_u = 0.0;
  double rms_tau = 0.0;
  double terminal_speed = 0.0;
};

struct MetricsReport {
  std::vector<VehicleMetrics> vehicles;
  double max_peak_u = 0.0;
  double max_peak_tau = 0.0;
  double max_rms_u = 0.0;
  double max_rms_tau = 0.0;
  double steady_state_window = 0.2;  // fraction of the run
  double steady_state_distance = 0.0;
  double initial_distance = 0.0;
  double final_distance = 0.0;
};

/// Largest |x_i - x_j| over all pairs.
double max_pairwise_distance(std::span<const VehicleState> states);

/// Throws std::invalid_argument on an empty trajectory or a window outside (0, 1].
MetricsReport compute_metrics(const Trajectory& traj, double steady_state_window = 0.2);

}  // namespace rdv
