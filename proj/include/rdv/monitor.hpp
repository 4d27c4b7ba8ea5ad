#pragma once

// Composite Lyapunov function W = alpha W_tran + W_rot, the rho/theta
// homogeneity decomposition, and sampled estimates of the constants that
// appear in the stability argument.
//
// All sampled constants are estimates: maxima over finitely many draws from
// the unit-V shell S1 = {X : X^T P X = 1} times SO(3)^n. They are lower bounds
// of the true suprema, never certified bounds.

#include "rdv/consensus.hpp"
#include "rdv/control.hpp"
#include "rdv/random.hpp"
#include "rdv/vehicle.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rdv {

struct MonitorConfig {
  std::optional<double> alpha;  // unset: 1.1 x estimated alpha*
  std::optional<double> delta;  // unset: calibrated from the steady-state window
  double epsilon = 0.25;
  double varrho = 0.5;
  std::size_t sample_count = 100000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MonitorSample {
  double alpha = 0.0;
  double V = 0.0;
  double rho = 0.0;
  std::optional<Eigen::VectorXd> theta;  // unset when rho < 1e-12
  double W_tran = 0.0;
  double W_rot = 0.0;
  double W = 0.0;
  std::vector<double> omega_err;  // |w_i - reference w_i| per vehicle
  double gamma_dist = 0.0;        // max pairwise sqrt(|x_ij|^2 + |v_ij|^2)
};

/// X = (x_1j ; v_1j), j = 2..n, laid out as in RelativeClosedLoop.
Eigen::VectorXd relative_coordinates(std::span<const VehicleState> states);

struct RhoTheta {
  double rho = 0.0;
  std::optional<Eigen::VectorXd> theta;
};

inline constexpr double kRhoUndefined = 1e-12;

RhoTheta rho_theta(const Eigen::Ref<const Eigen::VectorXd>& X, const Eigen::MatrixXd& P);

/// g_i^i(X, R) = R_i^T g_i(X).
Vec3d body_ideal_force(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X,
                       const Mat3d& R_i);

/// h_i^i(X, R): body-frame time derivative of f_i(h_i(X)) along the closed
/// loop with thrust u_k = -m_k g_k^k . e3 (gravity cancels).
Vec3d body_force_rate(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X,
                      std::span<const Mat3d> R);

MonitorSample eval_W(const Eigen::Ref<const Eigen::VectorXd>& X, std::span<const Mat3d> R, std::span<const Vec3d> w,
                     const RelativeClosedLoop& rcl, const Eigen::MatrixXd& P, const ControlGains& gains, double alpha,
                     std::span<const VehicleParams> params);

/// Bundles everything eval_W needs for repeated evaluation along a run.
class LyapunovMonitor {
 public:
  LyapunovMonitor(RelativeClosedLoop rcl, LyapunovForm form, ControlGains gains, std::vector<VehicleParams> params,
                  double alpha);

  MonitorSample operator()(std::span<const VehicleState> states) const;
  double alpha() const { return alpha_; }
  const LyapunovForm& form() const { return form_; }
  const RelativeClosedLoop& closed_loop() const { return rcl_; }

 private:
  RelativeClosedLoop rcl_;
  LyapunovForm form_;
  ControlGains gains_;
  std::vector<VehicleParams> params_;
  double alpha_;
};

/// Draws theta uniformly on S1 (pushforward of the uniform sphere under
/// P^{-1/2}) and n Haar-uniform rotations. Sample k of stream `seed` is
/// reproducible independently of the total count.
class ShellSampler {
 public:
  static constexpr std::size_t kBatch = 4096;

  ShellSampler(const Eigen::MatrixXd& P, std::size_t vehicles, std::uint64_t seed);

  struct Draw {
    Eigen::VectorXd theta;
    std::vector<Mat3d> R;
  };
  Draw draw(std::size_t index) const;

  /// Calls fn(index, draw) for index in [begin, end), reusing one generator
  /// per batch.
  template <typename Fn>
  void visit(std::size_t begin, std::size_t end, Fn&& fn) const {
    Draw d{Eigen::VectorXd(shell_map_.rows()), std::vector<Mat3d>(vehicles_)};
    std::size_t k = begin;
    while (k < end) {
      const std::size_t batch = k / kBatch;
      const std::size_t batch_end = std::min(end, (batch + 1) * kBatch);
      Rng rng = batch_rng(batch);
      rng.discard(draw_cost() * (k - batch * kBatch));
      for (; k < batch_end; ++k) {
        fill(rng, d);
        fn(k, static_cast<const Draw&>(d));
      }
    }
  }

 private:
  Rng batch_rng(std::size_t batch) const;
  unsigned long long draw_cost() const;
  void fill(Rng& rng, Draw& d) const;

  Eigen::MatrixXd shell_map_;  // L^{-T} with P = L L^T
  std::size_t vehicles_;
  std::uint64_t seed_;
};

struct SampledMax {
  bool found = false;
  double value = 0.0;
  std::size_t sample_index = 0;
  std::size_t vehicle = 0;
  Eigen::VectorXd theta;
  std::vector<Mat3d> R;
};

struct ConstantsEstimate {
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  SampledMax alpha_star;  // sup sum_i |g_i^i(theta, R) . e3|
  double M2 = 0.0;        // lambda_min(Q) / (2 lambda_max(P)), exact
  SampledMax M1;          // (n-1)/2 max_j |dV/dv_1j(theta)|
  SampledMax M3;          // n max_i |h_i^i(theta, R) . e3|
  SampledMax M4;          // max_i k_i(theta, R)^2 / 2
  SampledMax M5;          // max sum_i |g_i^i(theta, R) x e3|
};

SampledMax estimate_alpha_star(const RelativeClosedLoop& rcl, const LyapunovForm& form, std::size_t sample_count,
                               std::uint64_t seed);

ConstantsEstimate estimate_constants(const RelativeClosedLoop& rcl, const LyapunovForm& form,
                                     std::span<const VehicleParams> params, std::size_t sample_count,
                                     std::uint64_t seed);

/// Exact max of |dV/dv_1j| over S1, via singular values. Oracle for M1.
double exact_M1(const LyapunovForm& form, std::size_t vehicles);

struct DecreaseViolation {
  std::size_t index = 0;  // interval [t[index], t[index + 1]]
  double t0 = 0.0;
  double t1 = 0.0;
  double W0 = 0.0;
  double increase = 0.0;
};

struct DecreaseReport {
  double delta = 0.0;
  bool delta_calibrated = false;
  std::size_t intervals = 0;
  std::vector<DecreaseViolation> violations;

  /// Violations after the first interval (the discrete-control transient).
  std::size_t violations_after_first() const;
};

/// Steady-state window used for calibration: final 20% of the run.
inline constexpr double kSteadyStateFraction = 0.2;

/// Reports every interval where W >= delta at its start yet W increased.
DecreaseReport decrease_test(std::span<const double> t, std::span<const MonitorSample> samples,
                             const MonitorConfig& config);

}  // namespace rdv
