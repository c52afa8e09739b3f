#pragma once

#include "inloop/pauli.hpp"

namespace inloop {

// Bloch decay rates shared by both master equations:
//   dx/dt = -gamma_x x,  dy/dt = -gamma_y y,  dz/dt = -gamma_z z - C
struct RateSet {
  double gamma_x = 0.5;
  double gamma_y = 0.5;
  double gamma_z = 1.0;
  double C = 1.0;

  // z of the stationary state, -C / gamma_z.
  double z_steady() const { return -C / gamma_z; }
};

// Closed-form solution of the decoupled Bloch equations.
AtomState evolve(const RateSet& rates, const AtomState& s0, double t);

}  // namespace inloop
