#include "rdv/sim.hpp"

#include "rdv/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdv {

void DisturbanceSpec::validate() const {
  if (!(force_max >= 0.0 && torque_max >= 0.0 && gyro_max >= 0.0 && f_angle_max >= 0.0)) {
    throw std::invalid_argument("disturbance maxima must be >= 0");
  }
  if (!(f_scale_range[0] > 0.0 && f_scale_range[0] <= f_scale_range[1])) {
    throw std::invalid_argument("disturbance scale range must be positive with lower <= upper");
  }
  if (!(update_hz > 0.0)) throw std::invalid_argument("disturbance update rate must be positive");
}

DisturbanceSample sample_disturbance(const DisturbanceSpec& spec, Rng& rng) {
  DisturbanceSample s;
  auto bounded = [&](double max) -> Vec3d {
    const Vec3d dir = rng.unit_vector();
    return rng.uniform(0.0, max) * dir;
  };
  s.force = bounded(spec.force_max);
  s.torque = bounded(spec.torque_max);
  s.gyro = bounded(spec.gyro_max);
  const Vec3d axis = rng.unit_vector();
  const double angle = rng.uniform(0.0, spec.f_angle_max);
  s.f_rotation = so3_exp(angle * axis);
  s.f_scale = rng.uniform(spec.f_scale_range[0], spec.f_scale_range[1]);
  return s;
}

DisturbanceProcess::DisturbanceProcess(DisturbanceSpec spec, std::size_t vehicles, std::uint64_t seed)
    : spec_(spec), current_(vehicles) {
  spec_.validate();
  streams_.reserve(vehicles);
  for (std::size_t i = 0; i < vehicles; ++i) streams_.emplace_back(derive_seed(seed, 0x6469737475726200ull + i));
}

const std::vector<DisturbanceSample>& DisturbanceProcess::at(double t) {
  // The small offset keeps k/update_hz inside update k despite rounding.
  const auto target = static_cast<long long>(std::floor(t * spec_.update_hz + 1e-9));
  while (index_ < target) {
    ++index_;
    for (std::size_t i = 0; i < streams_.size(); ++i) current_[i] = sample_disturbance(spec_, streams_[i]);
  }
  return current_;
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || dt > kMaxDt) throw std::invalid_argument("dt must lie in (0, 0.01]");
  if (!(t_final >= dt)) throw std::invalid_argument("t_final must be >= dt");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (disturbance) disturbance->validate();
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::llround(t_final / dt)); }

std::vector<ControlOutput> compute_controls(const ClosedLoop& sys, std::span<const VehicleState> states,
                                            const std::vector<DisturbanceSample>* dist) {
  const std::size_t n = sys.size();
  std::vector<ControlOutput> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    BodyMeasurement m = measure(states, sys.law.graph(), i);
    Vec3d f = body_force(m, sys.law, i);
    if (dist) {
      const DisturbanceSample& d = (*dist)[i];
      m.w_body += d.gyro;
      f = d.f_scale * (d.f_rotation * f);
    }
    out[i] = control_from_force(f, m.w_body, sys.gains.k1, sys.gains.k2, sys.params[i]);
  }
  return out;
}

namespace {

// Per-vehicle RK stage: attitude as R0 exp(theta).
struct Stage {
  Vec3d x, v, theta, w;
};

// theta' such that d/dt (R0 exp(theta)) = R0 exp(theta) hat(w).
Vec3d dexp_inv(const Vec3d& theta, const Vec3d& w) {
  const double a2 = theta.squaredNorm();
  double c;
  if (a2 < 1e-8) {
    c = 1.0 / 12.0 + a2 / 720.0;
  } else {
    const double a = std::sqrt(a2);
    c = (1.0 - 0.5 * a / std::tan(0.5 * a)) / a2;
  }
  const Vec3d tw = theta.cross(w);
  return w + 0.5 * tw + c * theta.cross(tw);
}

VehicleState to_state(const VehicleState& base, const Stage& s) {
  return {s.x, s.v, base.R * so3_exp(s.theta), s.w};
}

}  // namespace

namespace {

// One RK4 step with attitude stages R0 exp(theta). `controls_at` returns the
// controls for a stage snapshot; it is called with first = true for the
// start-of-step state.
template <typename ControlsAt>
std::vector<VehicleState> integrate(std::span<const VehicleState> states, std::span<const VehicleParams> params,
                                    const WorldConfig& world, double dt, const std::vector<DisturbanceSample>* dist,
                                    ControlsAt&& controls_at) {
  const std::size_t n = states.size();
  std::vector<Stage> y0(n);
  for (std::size_t i = 0; i < n; ++i) y0[i] = {states[i].x, states[i].v, Vec3d::Zero(), states[i].w_body};

  std::vector<VehicleState> snapshot(n);
  auto deriv = [&](const std::vector<Stage>& y, std::vector<Stage>& dy, bool first) {
    for (std::size_t i = 0; i < n; ++i) snapshot[i] = {y[i].x, y[i].v, states[i].R * so3_exp(y[i].theta), y[i].w};
    const std::vector<ControlOutput>& ctl = controls_at(snapshot, first);
    for (std::size_t i = 0; i < n; ++i) {
      Vec3d force = Vec3d::Zero();
      Vec3d tau = ctl[i].tau;
      if (dist) {
        force = (*dist)[i].force;
        tau += (*dist)[i].torque;
      }
      dy[i].x = y[i].v;
      dy[i].v = linear_acceleration(snapshot[i].R, ctl[i].u, params[i], world, force);
      dy[i].theta = dexp_inv(y[i].theta, y[i].w);
      dy[i].w = angular_acceleration(y[i].w, tau, params[i]);
    }
  };
  auto axpy = [&](const std::vector<Stage>& y, const std::vector<Stage>& k, double h) {
    std::vector<Stage> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = {y[i].x + h * k[i].x, y[i].v + h * k[i].v, y[i].theta + h * k[i].theta, y[i].w + h * k[i].w};
    }
    return out;
  };

  std::vector<Stage> k1(n), k2(n), k3(n), k4(n);
  deriv(y0, k1, true);
  deriv(axpy(y0, k1, 0.5 * dt), k2, false);
  deriv(axpy(y0, k2, 0.5 * dt), k3, false);
  deriv(axpy(y0, k3, dt), k4, false);

  std::vector<VehicleState> next(n);
  const double h6 = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    Stage s;
    s.x = y0[i].x + h6 * (k1[i].x + 2.0 * k2[i].x + 2.0 * k3[i].x + k4[i].x);
    s.v = y0[i].v + h6 * (k1[i].v + 2.0 * k2[i].v + 2.0 * k3[i].v + k4[i].v);
    s.theta = h6 * (k1[i].theta + 2.0 * k2[i].theta + 2.0 * k3[i].theta + k4[i].theta);
    s.w = y0[i].w + h6 * (k1[i].w + 2.0 * k2[i].w + 2.0 * k3[i].w + k4[i].w);
    next[i] = to_state(states[i], s);
    if (!next[i].finite()) throw NumericalError("non-finite state for vehicle " + std::to_string(i + 1));
    next[i].R = reorthonormalize(next[i].R);
  }
  return next;
}

}  // namespace

std::vector<VehicleState> advance(std::span<const VehicleState> states, std::span<const ControlOutput> controls,
                                  std::span<const VehicleParams> params, const WorldConfig& world, double dt) {
  if (controls.size() != states.size() || params.size() != states.size()) {
    throw std::invalid_argument("advance: states, controls and params must have equal length");
  }
  const std::vector<ControlOutput> held(controls.begin(), controls.end());
  return integrate(states, params, world, dt, nullptr,
                   [&](const std::vector<VehicleState>&, bool) -> const std::vector<ControlOutput>& { return held; });
}

StepResult step(const ClosedLoop& sys, std::span<const VehicleState> states, double dt,
                const std::vector<DisturbanceSample>* dist, bool continuous_control) {
  if (states.size() != sys.size()) throw std::invalid_argument("step: state count does not match vehicle count");
  StepResult res;
  res.controls = compute_controls(sys, states, dist);
  std::vector<ControlOutput> local;
  res.states = integrate(states, sys.params, sys.world, dt, dist,
                         [&](const std::vector<VehicleState>& snap, bool first) -> const std::vector<ControlOutput>& {
                           if (first || !continuous_control) return res.controls;
                           local = compute_controls(sys, snap, dist);
                           return local;
                         });
  return res;
}

Trajectory simulate(const ClosedLoop& sys, std::vector<VehicleState> initial, const SimConfig& config,
                    const MonitorFn& monitor) {
  config.validate();
  sys.gains.validate();
  if (initial.size() != sys.size()) throw std::invalid_argument("simulate: one initial state per vehicle required");

  const std::size_t steps = config.steps();
  std::optional<DisturbanceProcess> noise;
  if (config.disturbance) noise.emplace(*config.disturbance, sys.size(), config.seed);

  Trajectory traj;
  const std::size_t records = steps / config.record_every + 1;
  traj.t.reserve(records);
  traj.states.reserve(records);
  traj.controls.reserve(records);

  std::vector<VehicleState> current = std::move(initial);
  for (std::size_t k = 0;; ++k) {
    const double t = double(k) * config.dt;
    const std::vector<DisturbanceSample>* dist = noise ? &noise->at(t) : nullptr;
    const bool record = k % config.record_every == 0;
    if (k == steps) {
      if (record) {
        traj.t.push_back(t);
        traj.controls.push_back(compute_controls(sys, current, dist));
        if (monitor) traj.monitor.push_back(monitor(current));
        traj.states.push_back(std::move(current));
      }
      break;
    }
    StepResult r;
    try {
      r = step(sys, current, config.dt, dist, config.continuous_control);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(k) + " (t = " + std::to_string(t) + ")",
                           k, t);
    } catch (const std::domain_error& e) {
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(k) + " (t = " + std::to_string(t) + ")",
                           k, t);
    }
    if (record) {
      traj.t.push_back(t);
      traj.controls.push_back(std::move(r.controls));
      if (monitor) traj.monitor.push_back(monitor(current));
      traj.states.push_back(current);
    }
    current = std::move(r.states);
  }
  return traj;
}

}  // namespace rdv
