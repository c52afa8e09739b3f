#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "inloop/errors.hpp"
#include "inloop/feedback_me.hpp"
#include "inloop/spectra.hpp"
#include "inloop/squeezed_bath.hpp"
#include "support/generators.hpp"

using namespace inloop;
using inloop::testing::Draw;
using inloop::testing::pauli_matrix;

namespace {

constexpr double kPi = std::numbers::pi;
using Matrix4c = Eigen::Matrix4cd;

// Superoperators on column-stacked 2x2 matrices: vec(A X B) = (B^T kron A) vec(X).
Matrix4c left(const Matrix2c& a) { return Eigen::kroneckerProduct(Matrix2c::Identity(), a); }
Matrix4c right(const Matrix2c& b) {
  return Eigen::kroneckerProduct(Matrix2c(b.transpose()), Matrix2c::Identity());
}
Matrix4c lindblad(const Matrix2c& a) {
  const Matrix2c ad = a.adjoint();
  return left(a) * right(ad) - 0.5 * left(ad * a) - 0.5 * right(ad * a);
}

Matrix2c lowering() {
  Matrix2c s;
  s << 0, 0, 1, 0;
  return s;
}

Matrix4c feedback_liouvillian(double lambda, double eta, double eps) {
  const Matrix2c s = lowering();
  const Matrix2c half_y = 0.5 * pauli_matrix(2);
  // -i lambda [Y, s X + X s^+]
  const Matrix4c k = left(s) + right(s.adjoint());
  const Matrix4c comm = left(half_y) * k - right(half_y) * k;
  return lindblad(s) - Complex(0, lambda) * comm + (lambda * lambda / (eta * eps)) * lindblad(half_y);
}

Matrix4c squeezed_liouvillian(double eta, double L) {
  const Matrix2c s = lowering();
  const Matrix2c jump = (L + 1) * s - (L - 1) * Matrix2c(s.adjoint());
  return (1 - eta) * lindblad(s) + (eta / (4 * L)) * lindblad(jump);
}

Eigen::Vector4cd vec(const Matrix2c& m) { return Eigen::Map<const Eigen::Vector4cd>(m.data()); }
Matrix2c unvec(const Eigen::Vector4cd& v) { return Eigen::Map<const Matrix2c>(v.data()); }

// Regression oracle: c(t) = Tr[s^+ e^{L t}(s rho_ss)] with rho_ss the null vector of L.
struct RegressionOracle {
  Matrix4c liouvillian;
  Matrix2c rho_ss;

  explicit RegressionOracle(const Matrix4c& l) : liouvillian(l) {
    Eigen::ComplexEigenSolver<Matrix4c> es(l);
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (std::abs(es.eigenvalues()(i)) < std::abs(es.eigenvalues()(best))) best = i;
    Matrix2c r = unvec(es.eigenvectors().col(best));
    rho_ss = r / r.trace();
  }
  Complex operator()(double t) const {
    const Matrix2c s = lowering();
    const Eigen::Vector4cd v = (liouvillian * t).exp() * vec(s * rho_ss);
    return (s.adjoint() * unvec(v)).trace();
  }
};

double max_abs_diff(const Spectrum& a, const Spectrum& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.value.size(); ++i) m = std::max(m, std::abs(a.value[i] - b.value[i]));
  return m;
}

}  // namespace

TEST_CASE("correlation examples") {
  const RateSet natural;
  CHECK(correlation(natural, -1.0, 0.0) == 0.0);
  const RateSet r = rates(-0.76, 0.8, 0.95);
  const double z = r.z_steady();
  CHECK(std::abs(correlation(r, z, 1.0) - 0.25 * (1 + z) * (std::exp(-0.12) + std::exp(-0.5))) <
        1e-15);
  CHECK(std::abs(correlation(r, z, 0.0) - 0.5 * (1 + z)) < 1e-15);
}

TEST_CASE("closed-form correlation agrees with the regression oracle") {
  Draw draw(61);
  for (int n = 0; n < 50; ++n) {
    const auto p = draw.feedback();
    const RegressionOracle oracle(feedback_liouvillian(p.lambda, p.eta, p.eps));
    const RateSet r = rates(p.lambda, p.eta, p.eps);
    // the oracle's stationary state also confirms the closed-form z_ss
    CHECK(std::abs(oracle.rho_ss(0, 0).real() - 0.5 * (1 + r.z_steady())) < 1e-10);
    for (double t : {0.0, 0.3, 1.0, 4.0}) {
      const Complex c = oracle(t);
      CHECK(std::abs(c.imag()) < 1e-10);
      CHECK(std::abs(c.real() - correlation(r, r.z_steady(), t)) < 1e-10);
    }
  }
  for (int n = 0; n < 50; ++n) {
    const double eta = draw.uniform(0, 1), L = std::exp(draw.uniform(-3, 3));
    const RegressionOracle oracle(squeezed_liouvillian(eta, L));
    const RateSet r = build_squeezed_generator(eta, L).rates();
    for (double t : {0.0, 0.5, 2.0}) {
      CHECK(std::abs(oracle(t).real() - correlation(r, r.z_steady(), t)) < 1e-10);
    }
  }
}

TEST_CASE("regression correlation from the generator agrees with the oracle") {
  const auto gen = build_generator(-0.76, 0.8, 0.95);
  const RegressionOracle oracle(feedback_liouvillian(-0.76, 0.8, 0.95));
  const auto c = regression_correlation(gen.bloch(), 0.01, 301);
  for (std::size_t k = 0; k < c.size(); k += 50) {
    CHECK(std::abs(c[k] - oracle(0.01 * k)) < 1e-10);
  }
}

TEST_CASE("correlation decreases monotonically") {
  Draw draw(62);
  for (int n = 0; n < 200; ++n) {
    const auto p = draw.feedback();
    const RateSet r = rates(p.lambda, p.eta, p.eps);
    double prev = correlation(r, r.z_steady(), 0.0);
    for (int i = 1; i <= 200; ++i) {
      const double c = correlation(r, r.z_steady(), 0.05 * i);
      CHECK(c <= prev);
      prev = c;
    }
  }
}

TEST_CASE("analytic spectrum examples") {
  const std::vector<double> zero{0.0, 1.0};
  const Spectrum dark = analytic_power_spectrum(rates(0.0, 0.8, 0.95), 0.8, zero);
  CHECK(dark.value[0] == 0.0);
  CHECK(dark.value[1] == 0.0);

  const double p_in = analytic_power_spectrum(rates(-0.76, 0.8, 0.95), 0.8, zero).value[0];
  CHECK(std::abs(p_in - 0.2 * 0.38 / (8 * kPi * 0.62) * (1 / 0.12 + 1 / 0.5)) < 1e-15);
  // optimal-squeezing closed form, (1-eta) eta eps / (4 pi (2 - eta eps)) [1/(1 - eta eps) + 1]
  CHECK(std::abs(p_in - 0.2 * 0.76 / (4 * kPi * 1.24) * (1 / 0.24 + 1)) < 1e-15);
  CHECK(std::abs(p_in - 0.050399) < 1e-6);

  const RateSet free = build_squeezed_generator(0.8, 0.05).rates();
  const double p_free = analytic_power_spectrum(free, 0.8, zero).value[0];
  CHECK(std::abs(p_free - 0.2 * 7.22 / (8 * kPi * 8.22) * (1 / 0.12 + 1 / 8.1)) < 1e-14);

  RateSet bad;
  bad.C = 1.5;
  CHECK_THROWS_AS(analytic_power_spectrum(bad, 0.5, zero), ParameterError);
}

TEST_CASE("optimal in-loop spectrum has the two-Lorentzian closed form") {
  Draw draw(64);
  for (int n = 0; n < 200; ++n) {
    const double eta = draw.uniform(0.01, 1), eps = draw.uniform(0.01, 1);
    const double e = eta * eps;
    const std::vector<double> grid = linear_grid(-4, 4, 41);
    const Spectrum s = analytic_power_spectrum(rates(-e, eta, eps), eta, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w2 = 4 * grid[i] * grid[i];
      const double p = (1 - eta) * e / (4 * kPi * (2 - e)) * ((1 - e) / ((1 - e) * (1 - e) + w2) + 1 / (1 + w2));
      CHECK(std::abs(s.value[i] - p) < 1e-13 * std::max(p, 1e-3));
    }
  }
}

TEST_CASE("the numerical transform obeys the single-Lorentzian convention") {
  // gamma_x = gamma_y = g turns c(t) into one exponential
  const double g = 0.3, gz = 0.6, C = 0.2, eta = 0.35;
  const BlochGenerator gen(Eigen::Vector3d(-g, -g, -gz).asDiagonal(), {0, 0, -C});
  const double z = -C / gz;
  const std::vector<double> grid = linear_grid(-3, 3, 61);
  const Spectrum s = numerical_power_spectrum(gen, eta, grid, {200.0 / g, 1e-5});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid[i];
    const double one = (1 - eta) * (1 + z) * g / (8 * kPi * (g * g + w * w));
    CHECK(std::abs(s.value[i] - 2 * one) < 1e-10);
  }
}

TEST_CASE("numerical spectra match the analytic spectra") {
  const std::vector<double> grid = linear_grid(-3, 3, 601);
  const auto in_loop = build_generator(-0.76, 0.8, 0.95);
  const Spectrum num = numerical_power_spectrum(in_loop.bloch(), 0.8, grid, {200.0 / 0.12, 1e-3});
  const Spectrum ana = analytic_power_spectrum(in_loop.rates(), 0.8, grid);
  CHECK(max_abs_diff(num, ana) < 1e-4);
  CHECK(max_abs_diff(num, ana) < 1e-7);

  const auto free = build_squeezed_generator(0.8, 0.05);
  const Spectrum num_f = numerical_power_spectrum(free.bloch(), 0.8, grid);
  CHECK(max_abs_diff(num_f, analytic_power_spectrum(free.rates(), 0.8, grid)) < 1e-4);

  const Spectrum dark = numerical_power_spectrum(build_generator(0.0, 0.8, 0.95).bloch(), 0.8, grid);
  CHECK(*std::max_element(dark.value.begin(), dark.value.end()) < 1e-15);
}

TEST_CASE("under-resolved quadrature is refused with the required settings") {
  const auto gen = build_generator(-0.76, 0.8, 0.95);
  const std::vector<double> grid{0.0};
  try {
    numerical_power_spectrum(gen.bloch(), 0.8, grid, {10.0, 1e-3});
    FAIL("expected ParameterError");
  } catch (const ParameterError& e) {
    const std::string what = e.what();
    CHECK(what.find("tau_max >= 83.3") != std::string::npos);
    CHECK(what.find("dtau <= 0.16") != std::string::npos);
  }
  CHECK_THROWS_AS(numerical_power_spectrum(gen.bloch(), 0.8, grid, {500.0, 0.5}), ParameterError);
}

TEST_CASE("spectra are even, nonnegative and decrease away from the centre") {
  Draw draw(63);
  const std::vector<double> grid = linear_grid(-5, 5, 201);
  for (int n = 0; n < 100; ++n) {
    const auto p = draw.feedback();
    const Spectrum s = analytic_power_spectrum(rates(p.lambda, p.eta, p.eps), p.eta, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(s.value[i] >= 0.0);
      CHECK(std::abs(s.value[i] - s.value[grid.size() - 1 - i]) <= 1e-13 * s.value[100]);
      if (i > 100 && s.value[100] > 0) CHECK(s.value[i] < s.value[i - 1]);
    }
  }
}

TEST_CASE("two-Lorentzian fits recover the linewidths") {
  const std::vector<double> grid = linear_grid(-3, 3, 1201);
  const auto gen = build_generator(-0.76, 0.8, 0.95);
  const Spectrum s = numerical_power_spectrum(gen.bloch(), 0.8, grid);
  const LorentzianPair fit = fit_lorentzians(s, {0.01, 0.2, 0.01, 1.0, false});
  CHECK(fit.converged);
  CHECK(std::abs(fit.width_narrow - 0.12) < 0.01 * 0.12);
  CHECK(std::abs(fit.width_broad - 0.5) < 0.01 * 0.5);
}

TEST_CASE("integrated spectrum equals the closed-form total flux") {
  for (const bool feedback : {true, false}) {
    const RateSet r = feedback ? rates(-0.76, 0.8, 0.95) : build_squeezed_generator(0.8, 0.05).rates();
    // omega = s tan(theta) maps the real line onto (-pi/2, pi/2)
    const double scale = 0.5;
    const std::vector<double> theta = linear_grid(-0.5 * kPi + 1e-6, 0.5 * kPi - 1e-6, 200001);
    std::vector<double> omega;
    for (double t : theta) omega.push_back(scale * std::tan(t));
    const Spectrum p = analytic_power_spectrum(r, 0.8, omega);
    double total = 0.0;
    for (std::size_t i = 1; i < theta.size(); ++i) {
      const double j0 = scale / std::pow(std::cos(theta[i - 1]), 2);
      const double j1 = scale / std::pow(std::cos(theta[i]), 2);
      total += 0.5 * (p.value[i - 1] * j0 + p.value[i] * j1) * (theta[i] - theta[i - 1]);
    }
    const double expected = 0.2 * (r.gamma_z - r.C) / (4 * r.gamma_z);
    CHECK(std::abs(total - expected) < 1e-3 * expected);
  }
}

TEST_CASE("Fig. 2 report") {
  const Fig2Report r = fig2_report();
  CHECK(r.lambda == doctest::Approx(-0.76));
  CHECK(std::abs(r.squeezing - 0.05) < 1e-15);
  CHECK(std::abs(r.in_loop.gamma_x - 0.12) < 1e-14);
  CHECK(std::abs(r.in_loop.gamma_y - 0.5) < 1e-14);
  CHECK(std::abs(r.in_loop.gamma_z - 0.62) < 1e-14);
  CHECK(std::abs(r.in_loop.C - 0.24) < 1e-14);
  CHECK(std::abs(r.free.gamma_x - 0.12) < 1e-14);
  CHECK(std::abs(r.free.gamma_y - 8.1) < 1e-13);
  CHECK(std::abs(r.free.gamma_z - 8.22) < 1e-13);
  CHECK(r.free.C == 1.0);

  CHECK(r.in_loop_spectrum.omega.size() == kFig2Points);
  CHECK(r.in_loop_spectrum.omega.front() == -3.0);
  CHECK(r.in_loop_spectrum.omega.back() == 3.0);
  CHECK(max_abs_diff(r.in_loop_spectrum, r.in_loop_analytic) < 1e-4);
  CHECK(max_abs_diff(r.free_spectrum, r.free_analytic) < 1e-4);

  CHECK(std::abs(r.in_loop_fit.width_narrow - 0.12) < 0.01 * 0.12);
  CHECK(std::abs(r.free_fit.width_narrow - 0.12) < 0.01 * 0.12);

  // total weights (gamma_z - C)/gamma_z
  const double w_in = (r.in_loop.gamma_z - r.in_loop.C) / r.in_loop.gamma_z;
  const double w_free = (r.free.gamma_z - r.free.C) / r.free.gamma_z;
  CHECK(std::abs(w_in - 0.38 / 0.62) < 1e-14);
  CHECK(std::abs(w_free - 7.22 / 8.22) < 1e-14);

  // both peak at the centre; the natural curve is matched there
  const std::size_t mid = kFig2Points / 2;
  CHECK(r.in_loop_spectrum.omega[mid] == 0.0);
  CHECK(std::max_element(r.in_loop_spectrum.value.begin(), r.in_loop_spectrum.value.end()) -
            r.in_loop_spectrum.value.begin() ==
        static_cast<std::ptrdiff_t>(mid));
  CHECK(std::max_element(r.free_spectrum.value.begin(), r.free_spectrum.value.end()) -
            r.free_spectrum.value.begin() ==
        static_cast<std::ptrdiff_t>(mid));
  CHECK(std::abs(r.natural[mid] - r.in_loop_spectrum.value[mid]) < 1e-15);
  CHECK(std::abs(r.in_loop_spectrum.value[mid] - 0.050399) < 1e-6);
}

TEST_CASE("Fig. 2 in-loop curve vanishes without detection") {
  const Fig2Report r = fig2_report(0.8, 1e-9);
  CHECK(*std::max_element(r.in_loop_spectrum.value.begin(), r.in_loop_spectrum.value.end()) < 1e-8);
  CHECK_THROWS_AS(fig2_report(0.8, 1.0), ParameterError);
}
