#include "inloop/squeezed_bath.hpp"

#include <string>

#include "inloop/errors.hpp"

namespace inloop {

namespace {

void validate(double eta, double L) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ParameterError("eta must lie in [0, 1], got " + std::to_string(eta));
  }
  if (!(L > 0.0)) {
    throw ParameterError("L must be positive, got " + std::to_string(L));
  }
}

}  // namespace

SqueezedBathGenerator::SqueezedBathGenerator(double eta, double L) : eta_(eta), L_(L) {
  validate(eta, L);
  const AtomOperator sigma = AtomOperator::lowering();
  const AtomOperator jump =
      Complex(L + 1.0) * sigma - Complex(L - 1.0) * AtomOperator::raising();
  const double weight = eta / (4.0 * L);

  bloch_ = BlochGenerator::from_superoperator([&](const AtomOperator& rho) {
    return Complex(1.0 - eta) * apply_dissipator(sigma, rho) +
           Complex(weight) * apply_dissipator(jump, rho);
  });
}

RateSet SqueezedBathGenerator::rates() const {
  RateSet r;
  r.gamma_x = 0.5 * ((1.0 - eta_) + eta_ * L_);
  r.gamma_y = 0.5 * ((1.0 - eta_) + eta_ / L_);
  r.gamma_z = r.gamma_x + r.gamma_y;
  r.C = 1.0;
  return r;
}

SqueezedBathGenerator build_squeezed_generator(double eta, double L) {
  return SqueezedBathGenerator(eta, L);
}

SqueezingNM nm_from_L(double L) {
  if (!(L > 0.0)) {
    throw ParameterError("L must be positive, got " + std::to_string(L));
  }
  // 2N + 1 +- 2 sqrt(N(N+1)) = (sqrt(N+1) +- sqrt(N))^2
  return {(L - 1.0) * (L - 1.0) / (4.0 * L), (L * L - 1.0) / (4.0 * L)};
}

AtomState free_steady_state(double eta, double L) {
  return {0.0, 0.0, SqueezedBathGenerator(eta, L).rates().z_steady()};
}

}  // namespace inloop
