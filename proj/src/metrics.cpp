#include "rdv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdv {

double max_pairwise_distance(std::span<const VehicleState> states) {
  double d = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) d = std::max(d, (states[i].x - states[j].x).norm());
  }
  return d;
}

MetricsReport compute_metrics(const Trajectory& traj, double steady_state_window) {
  if (traj.records() == 0) throw std::invalid_argument("compute_metrics: empty trajectory");
  if (!(steady_state_window > 0.0 && steady_state_window <= 1.0)) {
    throw std::invalid_argument("compute_metrics: steady-state window must lie in (0, 1]");
  }
  const std::size_t n = traj.vehicles();
  const std::size_t records = traj.records();
  MetricsReport r;
  r.steady_state_window = steady_state_window;
  r.vehicles.resize(n);

  std::vector<double> sum_u2(n, 0.0), sum_tau2(n, 0.0);
  for (std::size_t k = 0; k < records; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = traj.controls[k][i];
      const double u = std::abs(c.u);
      const double tau = c.tau.norm();
      auto& m = r.vehicles[i];
      m.peak_u = std::max(m.peak_u, u);
      m.peak_tau = std::max(m.peak_tau, tau);
      sum_u2[i] += u * u;
      sum_tau2[i] += tau * tau;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& m = r.vehicles[i];
    m.rms_u = std::sqrt(sum_u2[i] / double(records));
    m.rms_tau = std::sqrt(sum_tau2[i] / double(records));
    m.terminal_speed = traj.states.back()[i].v.norm();
    r.max_peak_u = std::max(r.max_peak_u, m.peak_u);
    r.max_peak_tau = std::max(r.max_peak_tau, m.peak_tau);
    r.max_rms_u = std::max(r.max_rms_u, m.rms_u);
    r.max_rms_tau = std::max(r.max_rms_tau, m.rms_tau);
  }

  const double t0 = traj.t.front();
  const double t1 = traj.t.back();
  const double window_start = t1 - steady_state_window * (t1 - t0);
  for (std::size_t k = 0; k < records; ++k) {
    if (traj.t[k] < window_start - 1e-12) continue;
    r.steady_state_distance = std::max(r.steady_state_distance, max_pairwise_distance(traj.states[k]));
  }
  r.initial_distance = max_pairwise_distance(traj.states.front());
  r.final_distance = max_pairwise_distance(traj.states.back());
  return r;
}

}  // namespace rdv
