#include "inloop/feedback_me.hpp"

#include <cmath>
#include <string>

#include "inloop/errors.hpp"

namespace inloop {

AtomState evolve(const RateSet& r, const AtomState& s0, double t) {
  const double z_ss = r.z_steady();
  return {s0.x * std::exp(-r.gamma_x * t), s0.y * std::exp(-r.gamma_y * t),
          (s0.z - z_ss) * std::exp(-r.gamma_z * t) + z_ss};
}

void FeedbackParams::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ParameterError("eta must lie in (0, 1], got " + std::to_string(eta));
  }
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw ParameterError("eps must lie in (0, 1], got " + std::to_string(eps));
  }
  if (!(lambda > -eta) || !std::isfinite(lambda)) {
    throw ParameterError("unreachable feedback strength: lambda must exceed -eta");
  }
}

FeedbackGenerator::FeedbackGenerator(const FeedbackParams& params) : params_(params) {
  params_.validate();
  const double lambda = params_.lambda;
  const double noise = lambda * lambda / (params_.eta * params_.eps);
  const AtomOperator sigma = AtomOperator::lowering();
  const AtomOperator half_sy = Complex(0.5) * AtomOperator::sigma_y();

  bloch_ = BlochGenerator::from_superoperator([&](const AtomOperator& rho) {
    const AtomOperator kick = sigma * rho + rho * sigma.adjoint();
    return apply_dissipator(sigma, rho) + Complex(lambda) * apply_commutator(half_sy, kick) +
           Complex(noise) * apply_dissipator(half_sy, rho);
  });
}

RateSet FeedbackGenerator::rates() const {
  return inloop::rates(params_.lambda, params_.eta, params_.eps);
}

FeedbackGenerator build_generator(double lambda, double eta, double eps) {
  return FeedbackGenerator(FeedbackParams{lambda, eta, eps});
}

RateSet rates(double lambda, double eta, double eps) {
  FeedbackParams{lambda, eta, eps}.validate();
  RateSet r;
  r.gamma_x = 0.5 * (1.0 + 2.0 * lambda + lambda * lambda / (eta * eps));
  r.gamma_y = 0.5;
  r.gamma_z = r.gamma_x + r.gamma_y;
  r.C = 1.0 + lambda;
  return r;
}

double rates_from_squeezing(double squeezing, double eta) {
  return 0.5 * ((1.0 - eta) + eta * squeezing);
}

AtomState steady_state(double lambda, double eta, double eps) {
  const RateSet r = rates(lambda, eta, eps);
  if (!(r.gamma_z > 0.0)) {
    throw ParameterError("steady_state: gamma_z <= 0, no stationary state");
  }
  const double l2 = lambda * lambda;
  return {0.0, 0.0, -1.0 + l2 / (2.0 * eta * eps * (1.0 + lambda) + l2)};
}

AtomState evolve(const FeedbackGenerator& generator, const AtomState& s0, double t) {
  return evolve(generator.rates(), s0, t);
}

}  // namespace inloop
