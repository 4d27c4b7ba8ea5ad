#pragma once

#include "rdv/random.hpp"
#include "rdv/vehicle.hpp"

#include <vector>

namespace rdv::test {

inline Vec3d random_vec(Rng& rng, double scale = 1.0) {
  return scale * Vec3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
}

inline VehicleState random_state(Rng& rng) {
  VehicleState s;
  s.x = random_vec(rng, 10.0);
  s.v = random_vec(rng, 2.0);
  s.R = rng.rotation();
  s.w_body = random_vec(rng, 1.0);
  return s;
}

inline std::vector<VehicleState> random_states(Rng& rng, std::size_t n) {
  std::vector<VehicleState> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_state(rng));
  return s;
}

inline VehicleParams quad_params(double mass = 3.0, double scale = 1.0) {
  VehicleParams p;
  p.mass = mass;
  p.inertia = scale * Vec3d(0.13, 0.13, 0.04).asDiagonal();
  return p;
}

}  // namespace rdv::test
