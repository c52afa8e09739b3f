#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "inloop/bloch_generator.hpp"
#include "inloop/rates.hpp"

namespace inloop {

// Fluorescence power spectrum into the unmatched vacuum modes, photon flux per unit
// angular frequency, frequencies in units of the longitudinal decay rate.
//
// Normalization: P(omega) = (1 - eta)/(2 pi) Re int_0^inf exp(i omega t) c(t) dt with
// c(t) = <sigma^+(t) sigma(0)>_ss. This one-sided form reproduces
//   P = (1-eta)(gamma_z - C)/(8 pi gamma_z) [gamma_x/(gamma_x^2+w^2) + gamma_y/(gamma_y^2+w^2)].
// Reading <s~^+(-w) s(0)> as the two-sided transform instead gives twice this value.
struct Spectrum {
  std::vector<double> omega;
  std::vector<double> value;
  std::string convention = "one-sided: (1-eta)/(2pi) Re int_0^inf e^{i w t} c(t) dt";
};

std::vector<double> linear_grid(double lo, double hi, std::size_t points);

// c(t) = (1 + z_ss)/4 (exp(-gamma_x t) + exp(-gamma_y t)).
double correlation(const RateSet& rates, double z_ss, double t);

// Throws ParameterError when gamma_z < C (negative spectral weight).
Spectrum analytic_power_spectrum(const RateSet& rates, double eta, std::span<const double> grid);

struct QuadratureOptions {
  double tau_max = 0.0;  // 0 selects 40 / (slowest drift rate)
  double dtau = 1e-3;
};

// Quantum-regression spectrum computed from the generator alone: the operator
// sigma rho_ss is propagated with exp(drift dtau), c(t) is sampled on t_k = k dtau up to
// tau_max and integrated by the trapezoidal rule, with the tail beyond tau_max taken from
// an exponential fitted to the last two samples. The trapezoidal sum is evaluated in closed
// form as a matrix geometric series, so each frequency costs O(1).
//
// Throws ParameterError if tau_max < 10 / (slowest rate) or dtau > 0.1 / (fastest rate),
// naming the required values, or if the stationary dipole <sigma> is nonzero.
Spectrum numerical_power_spectrum(const BlochGenerator& generator, double eta,
                                  std::span<const double> grid, QuadratureOptions options = {});

// Sampled regression correlation c(k dtau), k = 0..count-1, from the generator.
std::vector<Complex> regression_correlation(const BlochGenerator& generator, double dtau,
                                            std::size_t count);

// f(w) = a1 g1/(g1^2 + w^2) + a2 g2/(g2^2 + w^2), with g1 <= g2 after fitting.
struct LorentzianPair {
  double weight_narrow = 0.0;
  double width_narrow = 0.0;
  double weight_broad = 0.0;
  double width_broad = 0.0;
  bool converged = false;
};

// Levenberg-Marquardt fit; `guess` supplies the starting point.
LorentzianPair fit_lorentzians(const Spectrum& spectrum, const LorentzianPair& guess);

// Trapezoidal integral of the sampled spectrum over its grid.
double integrate(const Spectrum& spectrum);

struct Fig2Report {
  double eta = 0.0;
  double eps = 0.0;
  double lambda = 0.0;  // optimal in-loop feedback, -eta eps
  double squeezing = 0.0;  // S_in = L = 1 - eps
  RateSet in_loop;
  RateSet free;
  Spectrum in_loop_spectrum;  // numerical regression spectra
  Spectrum free_spectrum;
  Spectrum in_loop_analytic;
  Spectrum free_analytic;
  // Natural-width Lorentzian natural_scale * (1/2)/(1/4 + w^2), peak-matched to in-loop.
  double natural_scale = 0.0;
  std::vector<double> natural;
  LorentzianPair in_loop_fit;
  LorentzianPair free_fit;
};

inline constexpr std::size_t kFig2Points = 1201;
inline constexpr double kFig2OmegaMax = 3.0;

// In-loop model at the optimal gain (lambda = -eta eps, S = 1 - eps) against free
// squeezing with L = 1 - eps, on omega in [-3, 3] with 1201 points.
Fig2Report fig2_report(double eta = 0.8, double eps = 0.95);

}  // namespace inloop
