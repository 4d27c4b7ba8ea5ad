#pragma once

// Local and distributed thrust/torque feedback. Each vehicle uses only the
// body-frame relative states of its neighbors and its own body rate:
//
//   u   = -m (f . e3)
//   tau = w x J w - k1 J ((w x f) x e3) - k1^2 k2 (w - k1 (f x e3))
//
// where f is the consensus law evaluated on body-frame measurements.

#include "rdv/consensus.hpp"
#include "rdv/vehicle.hpp"

#include <span>
#include <string>
#include <vector>

namespace rdv {

struct BodyMeasurement {
  std::vector<RelativeState> neighbors;  // body frame, ordered like graph.neighbors(i)
  Vec3d w_body = Vec3d::Zero();
};

struct ControlGains {
  double k1 = 2.0;
  double k2 = 0.45;

  /// Throws std::invalid_argument unless both gains are positive and finite.
  void validate() const;
  /// Conditions the stability argument asks for but the law does not need.
  std::vector<std::string> warnings() const;
};

/// x_ij^i = R_i^T (x_j - x_i), v_ij^i = R_i^T (v_j - v_i), own body rate.
BodyMeasurement measure(std::span<const VehicleState> states, const SensorDigraph& g, std::size_t i);

/// Inertial relative states y_i, same ordering as measure().
std::vector<RelativeState> inertial_relative(std::span<const VehicleState> states, const SensorDigraph& g,
                                             std::size_t i);

/// k1 (f x e3): body rate that turns the thrust axis toward f.
template <typename Derived>
Vec3<typename Derived::Scalar> reference_omega(const Eigen::MatrixBase<Derived>& f_body,
                                               typename Derived::Scalar k1) {
  return k1 * f_body.cross(e3<typename Derived::Scalar>());
}

/// Feedback given the (possibly perturbed) body-frame desired force and the
/// measured body rate.
template <typename Scalar>
ControlOutputT<Scalar> control_from_force(const Vec3<Scalar>& f_body, const Vec3<Scalar>& w, Scalar k1, Scalar k2,
                                          const VehicleParamsT<Scalar>& p) {
  const Vec3<Scalar> ez = e3<Scalar>();
  ControlOutputT<Scalar> out;
  out.u = -p.mass * f_body.dot(ez);
  out.tau = w.cross(p.inertia * w) - k1 * (p.inertia * (w.cross(f_body)).cross(ez)) -
            k1 * k1 * k2 * (w - reference_omega(f_body, k1));
  return out;
}

Vec3d body_force(const BodyMeasurement& meas, const ConsensusLaw& law, std::size_t i);

ControlOutput control(const BodyMeasurement& meas, const ConsensusLaw& law, std::size_t i, const ControlGains& gains,
                      const VehicleParams& p);

/// f_i(y_i) evaluated from inertial relative states.
Vec3d ideal_inertial_force(std::span<const VehicleState> states, const ConsensusLaw& law, std::size_t i);

}  // namespace rdv
