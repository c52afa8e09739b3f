#pragma once

#include "inloop/bloch_generator.hpp"
#include "inloop/rates.hpp"

namespace inloop {

// Markovian homodyne-feedback master equation for the in-loop atom,
//   d rho/dt = D[sigma]rho - i lambda [sigma_y/2, sigma rho + rho sigma^+]
//              + lambda^2/(eta eps) D[sigma_y/2]rho,
// with lambda = g eta / (1 - g) in (-eta, inf).
struct FeedbackParams {
  double lambda = 0.0;
  double eta = 1.0;
  double eps = 1.0;

  // Throws ParameterError unless eta, eps in (0, 1] and lambda > -eta.
  void validate() const;
};

class FeedbackGenerator {
 public:
  explicit FeedbackGenerator(const FeedbackParams& params);

  const FeedbackParams& params() const { return params_; }
  // Bloch drift assembled numerically from the Lindblad terms.
  const BlochGenerator& bloch() const { return bloch_; }
  // Closed-form rates.
  RateSet rates() const;

 private:
  FeedbackParams params_;
  BlochGenerator bloch_;
};

FeedbackGenerator build_generator(double lambda, double eta, double eps);

// gamma_x = (1 + 2 lambda + lambda^2/(eta eps))/2, gamma_y = 1/2,
// gamma_z = gamma_x + gamma_y, C = 1 + lambda.
RateSet rates(double lambda, double eta, double eps);

// gamma_x = ((1 - eta) + eta S)/2: linewidth of the x quadrature in terms of the
// low-frequency in-loop squeezing S. Pure formula, no domain checks.
double rates_from_squeezing(double squeezing, double eta);

// x = y = 0, z = -1 + lambda^2 / (2 eta eps (1 + lambda) + lambda^2).
AtomState steady_state(double lambda, double eta, double eps);

AtomState evolve(const FeedbackGenerator& generator, const AtomState& s0, double t);

}  // namespace inloop
