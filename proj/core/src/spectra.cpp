#include "inloop/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <unsupported/Eigen/NonLinearOptimization>

#include "inloop/errors.hpp"
#include "inloop/feedback_me.hpp"
#include "inloop/squeezed_bath.hpp"

namespace inloop {

namespace {

constexpr Complex kI{0.0, 1.0};

// Spectral weight below which a model is treated as dark.
constexpr double kDarkWeight = 1e-15;

struct RegressionSetup {
  Eigen::Vector3cd initial;  // Pauli vector b of sigma rho_ss = (b0 I + b.sigma)/2
  Eigen::RowVector3cd readout;  // c = readout * b = Tr[sigma^+ B]
};

RegressionSetup regression_setup(const BlochGenerator& generator) {
  const AtomState ss = generator.stationary_state();
  const AtomOperator start = AtomOperator::lowering() * AtomOperator::density(ss);
  if (std::abs(start.trace()) > 1e-12) {
    throw ParameterError("stationary dipole <sigma> is nonzero; coherent spectra unsupported");
  }
  RegressionSetup setup;
  setup.initial = Eigen::Vector3cd(2.0 * start.ax, 2.0 * start.ay, 2.0 * start.az);
  // Tr[sigma^+ (b.sigma)/2] = (bx + i by)/2
  setup.readout = Eigen::RowVector3cd(0.5, 0.5 * kI, 0.0);
  return setup;
}

struct RateBounds {
  double slowest;
  double fastest;
};

RateBounds rate_bounds(const BlochGenerator& generator) {
  const Eigen::Vector3cd ev = generator.drift_eigenvalues();
  RateBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < 3; ++i) {
    if (!(ev(i).real() < 0.0)) {
      throw ParameterError("generator has a non-decaying mode; spectrum undefined");
    }
    b.slowest = std::min(b.slowest, -ev(i).real());
    b.fastest = std::max(b.fastest, std::abs(ev(i)));
  }
  return b;
}

struct LorentzianFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<double>* omega;
  const std::vector<double>* value;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(omega->size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& residual) const {
    for (int i = 0; i < values(); ++i) {
      const double w2 = (*omega)[i] * (*omega)[i];
      residual(i) = p(0) * p(1) / (p(1) * p(1) + w2) + p(2) * p(3) / (p(3) * p(3) + w2) -
                    (*value)[i];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    for (int i = 0; i < values(); ++i) {
      const double w2 = (*omega)[i] * (*omega)[i];
      for (int c = 0; c < 2; ++c) {
        const double a = p(2 * c);
        const double g = p(2 * c + 1);
        const double d = g * g + w2;
        jac(i, 2 * c) = g / d;
        jac(i, 2 * c + 1) = a * (w2 - g * g) / (d * d);
      }
    }
    return 0;
  }
};

}  // namespace

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) {
    throw ParameterError("grid needs at least two points and hi > lo");
  }
  std::vector<double> grid(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
  return grid;
}

double correlation(const RateSet& rates, double z_ss, double t) {
  if (t < 0.0) {
    throw ParameterError("correlation delay must be nonnegative");
  }
  return 0.25 * (1.0 + z_ss) * (std::exp(-rates.gamma_x * t) + std::exp(-rates.gamma_y * t));
}

Spectrum analytic_power_spectrum(const RateSet& rates, double eta, std::span<const double> grid) {
  const double excess = rates.gamma_z - rates.C;
  if (excess < -1e-14) {
    throw ParameterError("negative spectral weight: gamma_z < C");
  }
  const double prefactor =
      (1.0 - eta) * std::max(excess, 0.0) / (8.0 * std::numbers::pi * rates.gamma_z);
  Spectrum s;
  s.omega.assign(grid.begin(), grid.end());
  s.value.reserve(grid.size());
  const double gx = rates.gamma_x;
  const double gy = rates.gamma_y;
  for (double w : grid) {
    s.value.push_back(prefactor * (gx / (gx * gx + w * w) + gy / (gy * gy + w * w)));
  }
  return s;
}

std::vector<Complex> regression_correlation(const BlochGenerator& generator, double dtau,
                                            std::size_t count) {
  const RegressionSetup setup = regression_setup(generator);
  const Eigen::Matrix3cd step = (generator.drift() * dtau).exp().cast<Complex>();
  std::vector<Complex> c;
  c.reserve(count);
  Eigen::Vector3cd b = setup.initial;
  for (std::size_t k = 0; k < count; ++k) {
    c.push_back(setup.readout * b);
    b = step * b;
  }
  return c;
}

Spectrum numerical_power_spectrum(const BlochGenerator& generator, double eta,
                                  std::span<const double> grid, QuadratureOptions options) {
  const RateBounds bounds = rate_bounds(generator);
  if (options.tau_max <= 0.0) options.tau_max = 40.0 / bounds.slowest;
  const double need_tau_max = 10.0 / bounds.slowest;
  const double need_dtau = 0.1 / bounds.fastest;
  if (options.tau_max < need_tau_max || !(options.dtau > 0.0) || options.dtau > need_dtau) {
    std::ostringstream msg;
    msg << "under-resolved correlation: need tau_max >= " << need_tau_max
        << " and dtau <= " << need_dtau << " (got " << options.tau_max << ", "
        << options.dtau << ")";
    throw ParameterError(msg.str());
  }

  const RegressionSetup setup = regression_setup(generator);
  const double dt = options.dtau;
  const auto last = static_cast<std::size_t>(std::ceil(options.tau_max / dt));
  const double t_last = static_cast<double>(last) * dt;

  const Eigen::Matrix3d step = (generator.drift() * dt).exp();
  // b_k = step^k b_0; keep b_{K-1} and b_K for the endpoint and the tail fit.
  Eigen::Vector3d re = setup.initial.real();
  Eigen::Vector3d im = setup.initial.imag();
  Eigen::Vector3cd before_last = setup.initial;
  for (std::size_t k = 0; k < last; ++k) {
    if (k + 1 == last) before_last = re.cast<Complex>() + kI * im.cast<Complex>();
    re = step * re;
    im = step * im;
  }
  const Eigen::Vector3cd b_last = re.cast<Complex>() + kI * im.cast<Complex>();
  const Complex c0 = setup.readout * setup.initial;
  const Complex c_last = setup.readout * b_last;
  const Complex c_before = setup.readout * before_last;

  Complex decay = 0.0;
  const bool has_tail = std::abs(c_last) > 0.0 && std::abs(c_before) > std::abs(c_last);
  if (has_tail) decay = std::log(c_before / c_last) / dt;

  const Eigen::Matrix3cd step_c = step.cast<Complex>();
  const Eigen::Vector3cd next_after_last = step_c * b_last;
  const double prefactor = (1.0 - eta) / (2.0 * std::numbers::pi);

  Spectrum s;
  s.omega.assign(grid.begin(), grid.end());
  s.value.reserve(grid.size());
  for (double w : grid) {
    const Complex rot = std::exp(kI * (w * dt));
    // sum_{k=0}^{K} (rot step)^k b0 = (I - rot step)^{-1} (b0 - rot^{K+1} step^{K+1} b0)
    const Eigen::Matrix3cd resolvent = Eigen::Matrix3cd::Identity() - rot * step_c;
    const Complex phase_end = std::exp(kI * (w * t_last));
    const Eigen::Vector3cd rhs = setup.initial - phase_end * rot * next_after_last;
    const Complex total = setup.readout * resolvent.partialPivLu().solve(rhs);
    Complex integral = dt * (total - 0.5 * c0 - 0.5 * phase_end * c_last);
    if (has_tail) integral += phase_end * c_last / (decay - kI * w);
    s.value.push_back(prefactor * integral.real());
  }
  return s;
}

LorentzianPair fit_lorentzians(const Spectrum& spectrum, const LorentzianPair& guess) {
  LorentzianFunctor functor{&spectrum.omega, &spectrum.value};
  Eigen::VectorXd p(4);
  p << guess.weight_narrow, guess.width_narrow, guess.weight_broad, guess.width_broad;
  Eigen::LevenbergMarquardt<LorentzianFunctor> lm(functor);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.parameters.maxfev = 2000;
  const auto status = lm.minimize(p);

  LorentzianPair fit;
  fit.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall;
  // A Lorentzian is invariant under (a, g) -> (-a, -g).
  double a1 = p(0), g1 = p(1), a2 = p(2), g2 = p(3);
  if (g1 < 0.0) { a1 = -a1; g1 = -g1; }
  if (g2 < 0.0) { a2 = -a2; g2 = -g2; }
  if (g1 > g2) {
    std::swap(a1, a2);
    std::swap(g1, g2);
  }
  fit.weight_narrow = a1;
  fit.width_narrow = g1;
  fit.weight_broad = a2;
  fit.width_broad = g2;
  return fit;
}

double integrate(const Spectrum& spectrum) {
  double acc = 0.0;
  for (std::size_t i = 1; i < spectrum.omega.size(); ++i) {
    acc += 0.5 * (spectrum.value[i] + spectrum.value[i - 1]) *
           (spectrum.omega[i] - spectrum.omega[i - 1]);
  }
  return acc;
}

namespace {

LorentzianPair fit_guess(const Spectrum& s) {
  // Half width at half maximum of the sampled curve seeds the narrow component.
  const auto peak_it = std::max_element(s.value.begin(), s.value.end());
  const double peak = *peak_it;
  const auto peak_idx = static_cast<std::size_t>(peak_it - s.value.begin());
  double hwhm = s.omega.back() - s.omega[peak_idx];
  for (std::size_t i = peak_idx; i < s.value.size(); ++i) {
    if (s.value[i] <= 0.5 * peak) {
      hwhm = s.omega[i] - s.omega[peak_idx];
      break;
    }
  }
  hwhm = std::max(hwhm, 1e-3);
  return {0.5 * peak * hwhm, hwhm, 0.5 * peak * 10.0 * hwhm, 10.0 * hwhm, false};
}

LorentzianPair fit_or_dark(const Spectrum& s) {
  const double peak = *std::max_element(s.value.begin(), s.value.end());
  if (!(peak > kDarkWeight)) return {};
  return fit_lorentzians(s, fit_guess(s));
}

}  // namespace

Fig2Report fig2_report(double eta, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw ParameterError("fig2 needs 0 < eps < 1");
  }
  Fig2Report r;
  r.eta = eta;
  r.eps = eps;
  r.lambda = -eta * eps;
  r.squeezing = 1.0 - eps;

  const FeedbackGenerator in_loop = build_generator(r.lambda, eta, eps);
  const SqueezedBathGenerator free = build_squeezed_generator(eta, r.squeezing);
  r.in_loop = in_loop.rates();
  r.free = free.rates();

  const std::vector<double> grid = linear_grid(-kFig2OmegaMax, kFig2OmegaMax, kFig2Points);
  r.in_loop_spectrum = numerical_power_spectrum(in_loop.bloch(), eta, grid);
  r.free_spectrum = numerical_power_spectrum(free.bloch(), eta, grid);
  r.in_loop_analytic = analytic_power_spectrum(r.in_loop, eta, grid);
  r.free_analytic = analytic_power_spectrum(r.free, eta, grid);

  // P_natural(0) = natural_scale * 2 matches P_inloop(0).
  const double peak = *std::max_element(r.in_loop_spectrum.value.begin(),
                                        r.in_loop_spectrum.value.end());
  r.natural_scale = 0.5 * peak;
  r.natural.reserve(grid.size());
  for (double w : grid) r.natural.push_back(r.natural_scale * 0.5 / (0.25 + w * w));

  r.in_loop_fit = fit_or_dark(r.in_loop_spectrum);
  r.free_fit = fit_or_dark(r.free_spectrum);
  return r;
}

}  // namespace inloop
