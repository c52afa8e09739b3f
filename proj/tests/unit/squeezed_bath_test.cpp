#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "inloop/errors.hpp"
#include "inloop/feedback_me.hpp"
#include "inloop/squeezed_bath.hpp"
#include "support/generators.hpp"

using namespace inloop;
using inloop::testing::Draw;

namespace {

// Root of f on [lo, hi] by bisection, f(lo) and f(hi) of opposite sign.
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("vacuum input gives natural rates") {
  const RateSet r = build_squeezed_generator(0.7, 1.0).rates();
  CHECK(std::abs(r.gamma_x - 0.5) < 1e-15);
  CHECK(std::abs(r.gamma_y - 0.5) < 1e-15);
  CHECK(std::abs(r.gamma_z - 1.0) < 1e-15);
  CHECK(std::abs(r.C - 1.0) < 1e-15);
}

TEST_CASE("free squeezing rates at eta = 0.8, L = 0.05") {
  const SqueezedBathGenerator gen = build_squeezed_generator(0.8, 0.05);
  const RateSet r = gen.rates();
  CHECK(std::abs(r.gamma_x - 0.12) < 1e-14);
  CHECK(std::abs(r.gamma_y - 8.1) < 1e-13);
  CHECK(std::abs(r.gamma_z - 8.22) < 1e-13);
  CHECK(r.C == 1.0);
  CHECK((gen.bloch().drift() - Eigen::Vector3d(-0.12, -8.1, -8.22).asDiagonal().toDenseMatrix())
            .norm() < 1e-12);
  CHECK(std::abs(gen.bloch().constant().z() + 1.0) < 1e-12);
}

TEST_CASE("domain checks") {
  CHECK_THROWS_AS(build_squeezed_generator(0.5, 0.0), ParameterError);
  CHECK_THROWS_AS(build_squeezed_generator(0.5, -1.0), ParameterError);
  CHECK_THROWS_AS(build_squeezed_generator(1.5, 0.5), ParameterError);
  CHECK_NOTHROW(build_squeezed_generator(0.0, 0.5));
  CHECK_NOTHROW(build_squeezed_generator(1.0, 4.0));
}

TEST_CASE("numerically assembled drift has the closed-form spectrum") {
  Draw draw(31);
  for (int n = 0; n < 1000; ++n) {
    const double eta = draw.uniform(0, 1);
    const double L = std::exp(draw.uniform(-5, 3));
    const SqueezedBathGenerator gen = build_squeezed_generator(eta, L);
    const RateSet r = gen.rates();
    const Eigen::Vector3cd ev = gen.bloch().drift_eigenvalues();
    std::array<double, 3> got{ev(0).real(), ev(1).real(), ev(2).real()};
    std::array<double, 3> want{-r.gamma_x, -r.gamma_y, -r.gamma_z};
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10 * (1 + r.gamma_z));
    CHECK(std::abs(r.gamma_x - 0.5 * ((1 - eta) + eta * L)) < 1e-14);
    CHECK(std::abs(r.gamma_y - 0.5 * ((1 - eta) + eta / L)) < 1e-12 * (1 + r.gamma_y));
    CHECK(std::abs(gen.bloch().constant().z() + 1.0) < 1e-12);
  }
}

TEST_CASE("free and in-loop squeezing give the same x linewidth at equal squeezing") {
  Draw draw(32);
  for (int n = 0; n < 1000; ++n) {
    const double eta = draw.uniform(0, 1);
    const double L = std::exp(draw.uniform(-5, 3));
    CHECK(std::abs(build_squeezed_generator(eta, L).rates().gamma_x -
                   rates_from_squeezing(L, eta)) < 1e-12);
  }
}

TEST_CASE("gamma_y decreases strictly with L on (0, 1]") {
  Draw draw(33);
  for (int n = 0; n < 1000; ++n) {
    const double eta = draw.uniform(0.01, 1);
    double a = draw.uniform(1e-3, 1), b = draw.uniform(1e-3, 1);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-9) continue;
    CHECK(build_squeezed_generator(eta, a).rates().gamma_y >
          build_squeezed_generator(eta, b).rates().gamma_y);
  }
}

TEST_CASE("N and M from L") {
  const SqueezingNM vac = nm_from_L(1.0);
  CHECK(vac.N == 0.0);
  CHECK(vac.M == 0.0);

  // root of 2N - 2 sqrt(N(N+1)) + 1 = L on the squeezed branch
  const double L = 0.05;
  const double N = bisect([&](double n) { return 2 * n - 2 * std::sqrt(n * (n + 1)) + 1 - L; },
                          0.0, 100.0);
  const SqueezingNM nm = nm_from_L(L);
  CHECK(std::abs(nm.N - N) < 1e-9);
  CHECK(std::abs(nm.N - 4.5125) < 1e-10);
  CHECK(std::abs(nm.M + 4.9875) < 1e-10);
  CHECK(std::abs(2 * nm.N + 2 * nm.M + 1 - L) < 1e-10);

  const double N9 = bisect([](double n) { return 2 * n + 2 * std::sqrt(n * (n + 1)) + 1 - 9; },
                           0.0, 100.0);
  const SqueezingNM anti = nm_from_L(9.0);
  CHECK(anti.M > 0);
  CHECK(std::abs(anti.N - N9) < 1e-9);
  CHECK(std::abs(2 * anti.N + 2 * anti.M + 1 - 9.0) < 1e-10);
  CHECK_THROWS_AS(nm_from_L(0.0), ParameterError);
}

TEST_CASE("N and M round trip over random L") {
  Draw draw(34);
  for (int n = 0; n < 1000; ++n) {
    const double L = std::exp(draw.uniform(-6, 6));
    const SqueezingNM nm = nm_from_L(L);
    CHECK(nm.N >= 0.0);
    CHECK(std::abs(2 * nm.N + 2 * nm.M + 1 - L) < 1e-10 * std::max(1.0, L));
    CHECK(std::abs(nm.M * nm.M - nm.N * (nm.N + 1)) < 1e-9 * std::max(1.0, nm.N * nm.N));
    CHECK((nm.M > 0) == (L > 1));
  }
}

TEST_CASE("free steady state") {
  CHECK(std::abs(free_steady_state(0.5, 1.0).z + 1.0) < 1e-15);
  CHECK(std::abs(free_steady_state(0.8, 0.05).z + 1.0 / 8.22) < 1e-14);
  CHECK(std::abs(free_steady_state(0.8, 0.05).z + 0.12165) < 5e-6);
  CHECK(std::abs(free_steady_state(0.0, 0.01).z + 1.0) < 1e-15);
  const SqueezedBathGenerator gen = build_squeezed_generator(0.8, 0.05);
  CHECK(gen.bloch().apply(free_steady_state(0.8, 0.05)).vector().norm() < 1e-12);
}

TEST_CASE("small-time maps are completely positive") {
  Draw draw(35);
  for (int n = 0; n < 300; ++n) {
    const double eta = draw.uniform(0, 1);
    const double L = std::exp(draw.uniform(-4, 4));
    const BlochGenerator& b = build_squeezed_generator(eta, L).bloch();
    for (double dt : {1e-3, 1e-2, 1e-1}) CHECK(choi_min_eigenvalue(b, dt) >= -kExactTolerance);
  }
}
