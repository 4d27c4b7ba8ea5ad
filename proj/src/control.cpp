#include "rdv/control.hpp"

#include <cmath>
#include <stdexcept>

namespace rdv {

void ControlGains::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !std::isfinite(k1) || !std::isfinite(k2)) {
    throw std::invalid_argument("control gains k1, k2 must be positive");
  }
}

std::vector<std::string> ControlGains::warnings() const {
  std::vector<std::string> w;
  if (k1 <= 1.0) w.emplace_back("k1 <= 1: the rotational decrease estimate assumes k1 > 1");
  return w;
}

BodyMeasurement measure(std::span<const VehicleState> states, const SensorDigraph& g, std::size_t i) {
  const VehicleState& self = states[i];
  const Mat3d Rt = self.R.transpose();
  BodyMeasurement m;
  m.w_body = self.w_body;
  for (std::size_t j : g.neighbors(i)) {
    m.neighbors.push_back({Rt * (states[j].x - self.x), Rt * (states[j].v - self.v)});
  }
  return m;
}

std::vector<RelativeState> inertial_relative(std::span<const VehicleState> states, const SensorDigraph& g,
                                             std::size_t i) {
  std::vector<RelativeState> y;
  for (std::size_t j : g.neighbors(i)) y.push_back({states[j].x - states[i].x, states[j].v - states[i].v});
  return y;
}

Vec3d body_force(const BodyMeasurement& meas, const ConsensusLaw& law, std::size_t i) {
  return eval_f(law, i, meas.neighbors);
}

ControlOutput control(const BodyMeasurement& meas, const ConsensusLaw& law, std::size_t i, const ControlGains& gains,
                      const VehicleParams& p) {
  return control_from_force(body_force(meas, law, i), meas.w_body, gains.k1, gains.k2, p);
}

Vec3d ideal_inertial_force(std::span<const VehicleState> states, const ConsensusLaw& law, std::size_t i) {
  return eval_f(law, i, inertial_relative(states, law.graph(), i));
}

}  // namespace rdv
