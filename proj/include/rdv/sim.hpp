#pragma once

// Fixed-step integration of the n-vehicle closed loop.
//
// Each step integrates (x, v, w) with classical RK4 while the attitude is
// carried as R = R0 exp(theta) with theta' = dexp^{-1}_{-theta}(w)
// (Munthe-Kaas form). The step ends with R0 exp(theta) reorthonormalized.
// By default the control is held constant over the step (zero-order hold);
// `continuous_control` re-evaluates it at every RK stage instead.

#include "rdv/consensus.hpp"
#include "rdv/control.hpp"
#include "rdv/monitor.hpp"
#include "rdv/random.hpp"
#include "rdv/vehicle.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rdv {

struct DisturbanceSpec {
  double force_max = 0.25;      // N
  double torque_max = 0.25;     // N m
  double gyro_max = 0.25;       // rad/s
  double f_angle_max = 0.25;    // rad
  std::array<double, 2> f_scale_range{0.75, 1.25};
  double update_hz = 10.0;

  void validate() const;
  friend bool operator==(const DisturbanceSpec&, const DisturbanceSpec&) = default;
};

struct DisturbanceSample {
  Vec3d force = Vec3d::Zero();   // inertial, added to the thrust force
  Vec3d torque = Vec3d::Zero();  // added to the commanded torque
  Vec3d gyro = Vec3d::Zero();    // added to the body rate seen by the controller
  Mat3d f_rotation = Mat3d::Identity();
  double f_scale = 1.0;
};

/// One draw: uniform direction times magnitude uniform on [0, max]; the
/// force-direction error is a rotation by an angle uniform on
/// [0, f_angle_max] about a uniform axis.
DisturbanceSample sample_disturbance(const DisturbanceSpec& spec, Rng& rng);

/// Per-vehicle disturbances held constant between updates at update_hz.
/// Update k covers t in [k / update_hz, (k + 1) / update_hz).
class DisturbanceProcess {
 public:
  DisturbanceProcess(DisturbanceSpec spec, std::size_t vehicles, std::uint64_t seed);

  /// Samples in force at time t. Times must be non-decreasing across calls.
  const std::vector<DisturbanceSample>& at(double t);
  const DisturbanceSpec& spec() const { return spec_; }

 private:
  DisturbanceSpec spec_;
  std::vector<Rng> streams_;
  std::vector<DisturbanceSample> current_;
  long long index_ = -1;
};

struct SimConfig {
  double dt = 1e-3;
  double t_final = 60.0;
  std::uint64_t seed = 0;
  std::optional<DisturbanceSpec> disturbance;
  std::size_t record_every = 1;
  bool continuous_control = false;

  void validate() const;
  std::size_t steps() const;
};

inline constexpr double kMaxDt = 0.01;

/// Everything fixed during a run except the vehicle states.
struct ClosedLoop {
  std::vector<VehicleParams> params;
  ConsensusLaw law;
  ControlGains gains;
  WorldConfig world;

  std::size_t size() const { return params.size(); }
};

/// Controls from a state snapshot with optional disturbances applied to the
/// controller inputs (gyro noise, force-direction rotation and scaling).
std::vector<ControlOutput> compute_controls(const ClosedLoop& sys, std::span<const VehicleState> states,
                                            const std::vector<DisturbanceSample>* dist = nullptr);

/// Advances vehicles by dt with the given controls held constant and no
/// disturbances (same integrator as step()).
std::vector<VehicleState> advance(std::span<const VehicleState> states, std::span<const ControlOutput> controls,
                                  std::span<const VehicleParams> params, const WorldConfig& world, double dt);

struct StepResult {
  std::vector<VehicleState> states;
  std::vector<ControlOutput> controls;  // applied during the step (pre-noise)
};

/// Advances all vehicles by dt. Throws NumericalError on non-finite state.
StepResult step(const ClosedLoop& sys, std::span<const VehicleState> states, double dt,
                const std::vector<DisturbanceSample>* dist = nullptr, bool continuous_control = false);

struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<VehicleState>> states;     // [record][vehicle]
  std::vector<std::vector<ControlOutput>> controls;  // [record][vehicle]
  std::vector<MonitorSample> monitor;                // empty unless monitored

  std::size_t records() const { return t.size(); }
  std::size_t vehicles() const { return states.empty() ? 0 : states.front().size(); }
};

using MonitorFn = std::function<MonitorSample(std::span<const VehicleState>)>;

/// Integrates from `initial` over [0, t_final], recording steps that are
/// multiples of record_every (step 0 included).
Trajectory simulate(const ClosedLoop& sys, std::vector<VehicleState> initial, const SimConfig& config,
                    const MonitorFn& monitor = {});

}  // namespace rdv
