#include "inloop/pauli.hpp"

#include <cmath>

#include "inloop/errors.hpp"

namespace inloop {

namespace {

constexpr Complex kI{0.0, 1.0};

}  // namespace

bool AtomOperator::is_hermitian(double tol) const {
  return std::abs(a0.imag()) <= tol && std::abs(ax.imag()) <= tol &&
         std::abs(ay.imag()) <= tol && std::abs(az.imag()) <= tol;
}

Matrix2c AtomOperator::matrix() const {
  Matrix2c m;
  m << a0 + az, ax - kI * ay, ax + kI * ay, a0 - az;
  return m;
}

AtomOperator AtomOperator::from_matrix(const Matrix2c& m) {
  return {0.5 * (m(0, 0) + m(1, 1)), 0.5 * (m(0, 1) + m(1, 0)),
          0.5 * kI * (m(0, 1) - m(1, 0)), 0.5 * (m(0, 0) - m(1, 1))};
}

AtomOperator& AtomOperator::operator+=(const AtomOperator& o) {
  a0 += o.a0;
  ax += o.ax;
  ay += o.ay;
  az += o.az;
  return *this;
}

AtomOperator& AtomOperator::operator-=(const AtomOperator& o) {
  a0 -= o.a0;
  ax -= o.ax;
  ay -= o.ay;
  az -= o.az;
  return *this;
}

// (a0 + a.s)(b0 + b.s) = (a0 b0 + a.b) + (a0 b + b0 a + i a x b).s
AtomOperator operator*(const AtomOperator& a, const AtomOperator& b) {
  const Complex dot = a.ax * b.ax + a.ay * b.ay + a.az * b.az;
  const Complex cx = a.ay * b.az - a.az * b.ay;
  const Complex cy = a.az * b.ax - a.ax * b.az;
  const Complex cz = a.ax * b.ay - a.ay * b.ax;
  return {a.a0 * b.a0 + dot, a.a0 * b.ax + b.a0 * a.ax + kI * cx,
          a.a0 * b.ay + b.a0 * a.ay + kI * cy, a.a0 * b.az + b.a0 * a.az + kI * cz};
}

Matrix2c bloch_to_matrix(const AtomState& s) { return AtomOperator::density(s).matrix(); }

AtomState matrix_to_bloch(const Matrix2c& rho) {
  const AtomOperator op = AtomOperator::from_matrix(rho);
  return {2.0 * op.ax.real(), 2.0 * op.ay.real(), 2.0 * op.az.real()};
}

AtomOperator apply_dissipator(const AtomOperator& a, const AtomOperator& b) {
  const AtomOperator ad = a.adjoint();
  const AtomOperator ada = ad * a;
  return a * b * ad - Complex(0.5) * (ada * b + b * ada);
}

AtomOperator apply_commutator(const AtomOperator& h, const AtomOperator& b) {
  return -kI * (h * b - b * h);
}

BlochTangent tangent_of(const AtomOperator& delta) {
  return {2.0 * delta.ax.real(), 2.0 * delta.ay.real(), 2.0 * delta.az.real()};
}

BlochTangent dissipator(const AtomOperator& a, const AtomState& s) {
  return tangent_of(apply_dissipator(a, AtomOperator::density(s)));
}

BlochTangent measurement_superop(const AtomOperator& a, const AtomState& s) {
  const AtomOperator rho = AtomOperator::density(s);
  const AtomOperator kick = a * rho + rho * a.adjoint();
  return tangent_of(kick - kick.trace() * rho);
}

BlochTangent hamiltonian_flow(const AtomOperator& h, const AtomState& s) {
  if (!h.is_hermitian()) {
    throw ParameterError("hamiltonian_flow: Hamiltonian is not Hermitian");
  }
  return tangent_of(apply_commutator(h, AtomOperator::density(s)));
}

}  // namespace inloop
