#pragma once

#include "inloop/bloch_generator.hpp"
#include "inloop/rates.hpp"

namespace inloop {

// Atom in broadband, minimum-uncertainty free squeezing with mode-matching eta:
//   d rho/dt = (1 - eta) D[sigma]rho + eta/(4L) D[(L+1) sigma - (L-1) sigma^+]rho,
// where L = S_in^X = 1/S_in^Y. L < 1 squeezes X, L > 1 anti-squeezes it.
class SqueezedBathGenerator {
 public:
  // Throws ParameterError unless eta in [0, 1] and L > 0.
  SqueezedBathGenerator(double eta, double L);

  double eta() const { return eta_; }
  double L() const { return L_; }
  const BlochGenerator& bloch() const { return bloch_; }
  RateSet rates() const;

 private:
  double eta_;
  double L_;
  BlochGenerator bloch_;
};

SqueezedBathGenerator build_squeezed_generator(double eta, double L);

struct SqueezingNM {
  double N = 0.0;
  double M = 0.0;
};

// L = 2N + 2M + 1, M^2 = N(N+1), sign(M) = sign(L - 1).
SqueezingNM nm_from_L(double L);

AtomState free_steady_state(double eta, double L);

}  // namespace inloop
