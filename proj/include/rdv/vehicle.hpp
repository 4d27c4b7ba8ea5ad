#pragma once

// Equations of motion of one underactuated rigid body:
//   x' = v,  m v' = -u R e3 + m g,  R' = R hat(w),  J w' = tau - w x J w.

#include "rdv/lie.hpp"

#include <stdexcept>

namespace rdv {

template <typename Scalar>
Vec3<Scalar> e3() {
  return Vec3<Scalar>::UnitZ();
}

template <typename Scalar>
struct VehicleParamsT {
  Scalar mass = Scalar(1);
  Mat3<Scalar> inertia = Mat3<Scalar>::Identity();

  /// Throws std::invalid_argument unless mass > 0 and inertia is SPD.
  void validate() const {
    if (!(mass > Scalar(0)) || !std::isfinite(mass)) throw std::invalid_argument("vehicle mass must be positive");
    if (!inertia.allFinite() || (inertia - inertia.transpose()).norm() > Scalar(1e-12) * inertia.norm()) {
      throw std::invalid_argument("inertia matrix must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3<Scalar>> es(inertia, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= Scalar(0)) throw std::invalid_argument("inertia matrix must be positive definite");
  }
};

template <typename Scalar>
struct VehicleStateT {
  Vec3<Scalar> x = Vec3<Scalar>::Zero();
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
  Mat3<Scalar> R = Mat3<Scalar>::Identity();
  Vec3<Scalar> w_body = Vec3<Scalar>::Zero();

  /// Thrust direction q = -R e3.
  Vec3<Scalar> thrust_direction() const { return -R.col(2); }

  bool finite() const { return x.allFinite() && v.allFinite() && R.allFinite() && w_body.allFinite(); }
};

template <typename Scalar>
struct ControlOutputT {
  Scalar u = Scalar(0);  // may be negative
  Vec3<Scalar> tau = Vec3<Scalar>::Zero();
};

template <typename Scalar>
struct WorldConfigT {
  Vec3<Scalar> gravity = Vec3<Scalar>::Zero();
};

template <typename Scalar>
struct StateDerivativeT {
  Vec3<Scalar> dx;
  Vec3<Scalar> dv;
  Mat3<Scalar> dR;
  Vec3<Scalar> dw;
};

using VehicleParams = VehicleParamsT<double>;
using VehicleState = VehicleStateT<double>;
using ControlOutput = ControlOutputT<double>;
using WorldConfig = WorldConfigT<double>;
using StateDerivative = StateDerivativeT<double>;

template <typename Scalar>
Vec3<Scalar> thrust_direction(const VehicleStateT<Scalar>& s) {
  return s.thrust_direction();
}

/// Linear acceleration from thrust u along -R e3, an optional extra
/// inertial force, and gravity.
template <typename Scalar>
Vec3<Scalar> linear_acceleration(const Mat3<Scalar>& R, Scalar u, const VehicleParamsT<Scalar>& p,
                                 const WorldConfigT<Scalar>& world,
                                 const Vec3<Scalar>& extra_force = Vec3<Scalar>::Zero()) {
  return -(u / p.mass) * R.col(2) + extra_force / p.mass + world.gravity;
}

/// Euler's equation solved for the body angular acceleration.
template <typename Scalar>
Vec3<Scalar> angular_acceleration(const Vec3<Scalar>& w, const Vec3<Scalar>& tau, const VehicleParamsT<Scalar>& p) {
  return p.inertia.ldlt().solve(tau - w.cross(p.inertia * w));
}

template <typename Scalar>
StateDerivativeT<Scalar> state_derivative(const VehicleStateT<Scalar>& s, const ControlOutputT<Scalar>& c,
                                          const VehicleParamsT<Scalar>& p, const WorldConfigT<Scalar>& world) {
  return {s.v, linear_acceleration(s.R, c.u, p, world), s.R * hat(s.w_body), angular_acceleration(s.w_body, c.tau, p)};
}

}  // namespace rdv
