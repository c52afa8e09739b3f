#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "inloop/errors.hpp"
#include "inloop/psd.hpp"

using namespace inloop;

TEST_CASE("white noise of variance 1/dt has unit spectral density") {
  const double dt = 1e-3;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(dt));
  std::vector<double> x(400000);
  for (double& v : x) v = normal(rng);
  const PsdEstimate psd = welch_psd(x, dt);
  CHECK(psd.segments >= 100);
  CHECK((psd.segment_length & (psd.segment_length - 1)) == 0);
  const BandAverage all = band_average(psd, psd.omega[1], psd.omega.back());
  CHECK(std::abs(all.mean - 1.0) < 3 * all.std_error + 1e-3);
  // the lowest nonzero bin is not biased by mean removal
  const BandAverage first = band_average(psd, psd.omega[1], psd.omega[1]);
  CHECK(std::abs(first.mean - 1.0) < 4 * first.std_error);
  CHECK(std::abs(psd.omega.back() - std::numbers::pi / dt) < 1e-9 / dt);
}

TEST_CASE("AR(1) process matches its analytic spectrum") {
  // x_k = a x_{k-1} + e_k, S(w) = dt var(e) / |1 - a e^{-i w dt}|^2
  const double dt = 1e-2, a = 0.9;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(1 << 19);
  double prev = 0.0;
  for (double& v : x) prev = v = a * prev + normal(rng);
  const PsdEstimate psd = welch_psd(x, dt);
  for (double w : {1.0, 10.0, 100.0, 300.0}) {
    const BandAverage b = band_average(psd, w * 0.9, w * 1.1);
    const double s = dt / std::norm(1.0 - a * std::exp(std::complex<double>(0, -w * dt)));
    CAPTURE(w);
    CHECK(std::abs(b.mean - s) < 3 * b.std_error + 0.01 * s);
  }
}

TEST_CASE("sinusoid power lands at its frequency") {
  const double dt = 1e-3, w0 = 200.0;
  std::vector<double> x(1 << 17);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::cos(w0 * k * dt);
  const PsdEstimate psd = welch_psd(x, dt);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < psd.value.size(); ++k)
    if (psd.value[k] > psd.value[peak]) peak = k;
  const double bin = psd.omega[1];
  CHECK(std::abs(psd.omega[peak] - w0) <= bin);
}

TEST_CASE("short records and empty bands are rejected") {
  std::vector<double> x(100, 1.0);
  CHECK_THROWS_AS(welch_psd(x, 1e-3), ParameterError);
  std::vector<double> y(100000, 0.0);
  const PsdEstimate psd = welch_psd(y, 1.0);
  CHECK_THROWS_AS(band_average(psd, 10.0, 20.0), ParameterError);
}
