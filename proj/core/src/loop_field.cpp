#include "inloop/loop_field.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "inloop/errors.hpp"

namespace inloop {

namespace {

constexpr std::size_t kStabilityPoints = 4096;

}  // namespace

std::vector<double> stability_grid(const LoopConfig& cfg) {
  const double tau = cfg.filter.tau();
  double lo = 1e-3 / tau;
  double hi = 1e3 / tau;
  while (std::abs(cfg.g * cfg.filter.transfer(hi)) >= 0.5 && hi < 1e12 / tau) {
    hi *= 10.0;
  }
  std::vector<double> grid;
  grid.reserve(kStabilityPoints + 1);
  grid.push_back(0.0);
  const double ratio = std::log(hi / lo) / static_cast<double>(kStabilityPoints - 1);
  for (std::size_t k = 0; k < kStabilityPoints; ++k) {
    grid.push_back(lo * std::exp(ratio * static_cast<double>(k)));
  }
  return grid;
}

bool satisfies_gain_margin(const LoopConfig& cfg) {
  for (double omega : stability_grid(cfg)) {
    if (cfg.g * cfg.filter.transfer(omega).real() >= 1.0) return false;
  }
  return true;
}

bool is_stable(const LoopConfig& cfg) {
  if (cfg.g >= 1.0) return false;
  if (cfg.g == 0.0) return true;
  // f(-omega) = conj f(omega), so the winding number over the real line is
  // (arg change from 0 to infinity) / pi; f(0) = 1 - g > 0 and f(inf) = 1.
  double phase = 0.0;
  Complex previous = 1.0 - cfg.g;
  for (double omega : stability_grid(cfg)) {
    const Complex f = 1.0 - cfg.g * cfg.filter.transfer(omega);
    if (std::abs(f) < 1e-9) return false;
    phase += std::arg(f / previous);
    previous = f;
  }
  phase += std::arg(Complex(1.0) / previous);
  return std::abs(phase) < 0.5 * std::numbers::pi;
}

void require_valid(const LoopConfig& cfg) {
  if (!(cfg.eps > 0.0 && cfg.eps <= 1.0)) {
    throw ParameterError("eps must lie in (0, 1], got " + std::to_string(cfg.eps));
  }
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) {
    throw ParameterError("eta must lie in [0, 1], got " + std::to_string(cfg.eta));
  }
  if (!std::isfinite(cfg.g)) {
    throw ParameterError("gain must be finite");
  }
  if (!is_stable(cfg)) {
    throw InstabilityError("feedback loop with g = " + std::to_string(cfg.g) + " is unstable");
  }
}

double in_loop_spectrum(double g, double eps, Complex h) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw ParameterError("eps must lie in (0, 1], got " + std::to_string(eps));
  }
  const double h2 = std::norm(h);
  return (1.0 + g * g * h2 * (1.0 / eps - 1.0)) / std::norm(1.0 - g * h);
}

double homodyne_spectrum(double g, double eps, Complex h) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw ParameterError("eps must lie in (0, 1], got " + std::to_string(eps));
  }
  return 1.0 / std::norm(1.0 - g * h);
}

double in_loop_spectrum(const LoopConfig& cfg, double omega) {
  require_valid(cfg);
  return in_loop_spectrum(cfg.g, cfg.eps, cfg.filter.transfer(omega));
}

double homodyne_spectrum(const LoopConfig& cfg, double omega) {
  require_valid(cfg);
  return homodyne_spectrum(cfg.g, cfg.eps, cfg.filter.transfer(omega));
}

std::vector<double> in_loop_spectrum(const LoopConfig& cfg, std::span<const double> omegas) {
  require_valid(cfg);
  std::vector<double> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back(in_loop_spectrum(cfg.g, cfg.eps, cfg.filter.transfer(w)));
  return out;
}

std::vector<double> homodyne_spectrum(const LoopConfig& cfg, std::span<const double> omegas) {
  require_valid(cfg);
  std::vector<double> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back(homodyne_spectrum(cfg.g, cfg.eps, cfg.filter.transfer(w)));
  return out;
}

double optimal_gain(double eps) {
  if (eps >= 1.0) {
    throw ParameterError("perfect detection: infinite optimal gain");
  }
  if (!(eps > 0.0)) {
    throw ParameterError("eps must lie in (0, 1), got " + std::to_string(eps));
  }
  return -eps / (1.0 - eps);
}

double lambda_from_gain(double g, double eta) {
  if (!(g < 1.0)) {
    throw ParameterError("gain must be below 1 for a stable loop, got " + std::to_string(g));
  }
  return g * eta / (1.0 - g);
}

double gain_from_lambda(double lambda, double eta) {
  if (!(lambda > -eta)) {
    throw ParameterError("unreachable feedback strength: lambda must exceed -eta");
  }
  return lambda / (eta + lambda);
}

double squeezing_from_lambda(double lambda, double eta, double eps) {
  if (!(lambda > -eta)) {
    throw ParameterError("unreachable feedback strength: lambda must exceed -eta");
  }
  return 1.0 + 2.0 * lambda / eta + lambda * lambda / (eta * eta * eps);
}

ClassicalLoopRecord simulate_classical_loop(const LoopConfig& cfg, double dt, double duration,
                                            std::uint64_t seed) {
  require_valid(cfg);
  if (!(dt > 0.0) || dt > cfg.filter.tau() / 10.0 * (1.0 + 1e-12)) {
    throw ParameterError("loop simulation needs 0 < dt <= tau/10");
  }
  if (!(duration > 0.0)) {
    throw ParameterError("duration must be positive");
  }
  DiscreteFilter line(cfg.filter, dt);
  if (!discrete_loop_stable(line, cfg.g)) {
    throw InstabilityError("sampled feedback loop is unstable at this dt");
  }

  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  const std::size_t burn_in = 10 * line.warmup_steps();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(dt));

  const double sqrt_eps = std::sqrt(cfg.eps);
  const double sqrt_loss = std::sqrt(1.0 - cfg.eps);
  const double drive_gain = cfg.g / sqrt_eps;

  ClassicalLoopRecord rec;
  rec.dt = dt;
  rec.x_in.reserve(n);
  rec.current.reserve(n);
  for (std::size_t k = 0; k < n + burn_in; ++k) {
    const double xi_nu = normal(rng);
    const double xi_eps = normal(rng);
    const double drive = drive_gain * line.output();  // 2 beta phi
    const double x = xi_nu + drive;
    const double current = sqrt_eps * x + sqrt_loss * xi_eps;
    line.push(current);
    if (k >= burn_in) {
      rec.x_in.push_back(x);
      rec.current.push_back(current);
    }
  }
  return rec;
}

}  // namespace inloop
