#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inloop/loop_filter.hpp"

namespace inloop {

// Classical electro-optic loop: round-loop gain g, detector efficiency eps,
// mode-matching eta into the atom, loop response h(s).
struct LoopConfig {
  double g = 0.0;
  double eps = 1.0;
  double eta = 1.0;
  LoopFilter filter = LoopFilter::rectangular(1e-3);
};

// Frequencies used to judge stability: 4096 log-spaced points on
// [1e-3/tau, 1e3/tau] plus omega = 0, extended by decades until |g h~| < 1/2 at the top.
std::vector<double> stability_grid(const LoopConfig& cfg);

// g Re[h~(omega)] < 1 on the stability grid. Sufficient for stability, not necessary:
// a rectangular filter with g = -19 violates it yet the loop is stable.
bool satisfies_gain_margin(const LoopConfig& cfg);

// Nyquist criterion for the continuous loop: 1 - g h~ has no zeros in the closed upper
// half omega-plane, i.e. the curve 1 - g h~(omega) does not wind around the origin.
bool is_stable(const LoopConfig& cfg);

// Throws ParameterError for eps outside (0, 1] or eta outside [0, 1], and
// InstabilityError when is_stable fails.
void require_valid(const LoopConfig& cfg);

// S_in(omega) = [1 + g^2 |h~|^2 (1/eps - 1)] / |1 - g h~|^2 at a given h~.
double in_loop_spectrum(double g, double eps, Complex h);
// S_hom(omega) = 1 / |1 - g h~|^2 at a given h~.
//
// Obtained by closing the loop on I = sqrt(eps) X + sqrt(1 - eps) xi_eps with
// X = [xi_nu + g h~ sqrt((1-eps)/eps) xi_eps] / (1 - g h~): the vacuum and detector
// noise enter the current with weights sqrt(eps) and sqrt(1-eps), which sum in
// quadrature to one. Checked against the Monte-Carlo loop.
double homodyne_spectrum(double g, double eps, Complex h);

double in_loop_spectrum(const LoopConfig& cfg, double omega);
double homodyne_spectrum(const LoopConfig& cfg, double omega);
std::vector<double> in_loop_spectrum(const LoopConfig& cfg, std::span<const double> omegas);
std::vector<double> homodyne_spectrum(const LoopConfig& cfg, std::span<const double> omegas);

// g = -eps/(1 - eps), where S_in(h~ = 1) reaches its minimum 1 - eps.
double optimal_gain(double eps);

// lambda = g eta/(1 - g), requires g < 1.
double lambda_from_gain(double g, double eta);
// g = lambda/(eta + lambda), requires lambda > -eta.
double gain_from_lambda(double lambda, double eta);
// S_in at h~ = 1 in terms of lambda: 1 + 2 lambda/eta + lambda^2/(eta^2 eps).
double squeezing_from_lambda(double lambda, double eta, double eps);

// Sampled loop without the atom. White noises are Gaussian with variance 1/dt per sample.
struct ClassicalLoopRecord {
  double dt = 0.0;
  std::vector<double> x_in;     // in-loop amplitude quadrature X_in = xi_nu + 2 beta phi
  std::vector<double> current;  // homodyne current I_hom
};

// Requires dt <= tau/10. Throws InstabilityError if the sampled loop is unstable.
// The first `burn_in` samples (default: ten filter lengths) are discarded.
ClassicalLoopRecord simulate_classical_loop(const LoopConfig& cfg, double dt, double duration,
                                            std::uint64_t seed);

}  // namespace inloop
