#pragma once

// Single two-level system algebra.
//
// Conventions (fixed for the whole library):
//   |e> = (1, 0)^T,  |g> = (0, 1)^T
//   sigma_x, sigma_y, sigma_z are the standard Pauli matrices, sigma_z = diag(1, -1)
//   sigma   = |g><e| = (sigma_x - i sigma_y) / 2   (lowering operator)
//   rho     = (I + x sigma_x + y sigma_y + z sigma_z) / 2
// so that Tr[rho sigma_x] = x is the quadrature read by the homodyne current and
// sigma_y is the quadrature driven by the feedback Hamiltonian.

#include <complex>

#include <Eigen/Core>

namespace inloop {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

// Positivity tolerance for exact propagation.
inline constexpr double kExactTolerance = 1e-9;
// Positivity tolerance along Euler-type stochastic trajectories.
inline constexpr double kStochasticTolerance = 1e-6;

// Rate of change of a Bloch vector.
struct BlochTangent {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;

  BlochTangent& operator+=(const BlochTangent& o) {
    dx += o.dx;
    dy += o.dy;
    dz += o.dz;
    return *this;
  }
  friend BlochTangent operator+(BlochTangent a, const BlochTangent& b) { return a += b; }
  friend BlochTangent operator*(double c, const BlochTangent& t) {
    return {c * t.dx, c * t.dy, c * t.dz};
  }
  Eigen::Vector3d vector() const { return {dx, dy, dz}; }
};

// Two-level density matrix in Bloch coordinates.
struct AtomState {
  double x = 0.0;
  double y = 0.0;
  double z = -1.0;

  static constexpr AtomState ground() { return {0.0, 0.0, -1.0}; }
  static constexpr AtomState excited() { return {0.0, 0.0, 1.0}; }
  static AtomState from_vector(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

  Eigen::Vector3d vector() const { return {x, y, z}; }
  double radius_squared() const { return x * x + y * y + z * z; }
  bool within_bloch_ball(double tol) const { return radius_squared() <= 1.0 + tol; }

  AtomState& operator+=(const BlochTangent& t) {
    x += t.dx;
    y += t.dy;
    z += t.dz;
    return *this;
  }
  friend AtomState operator+(AtomState s, const BlochTangent& t) { return s += t; }
  friend bool operator==(const AtomState&, const AtomState&) = default;
};

// A = a0 I + ax sigma_x + ay sigma_y + az sigma_z with complex coefficients.
// Products are evaluated with the Pauli multiplication table, never via 2x2 matrices.
struct AtomOperator {
  Complex a0{};
  Complex ax{};
  Complex ay{};
  Complex az{};

  static AtomOperator identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static AtomOperator sigma_x() { return {0.0, 1.0, 0.0, 0.0}; }
  static AtomOperator sigma_y() { return {0.0, 0.0, 1.0, 0.0}; }
  static AtomOperator sigma_z() { return {0.0, 0.0, 0.0, 1.0}; }
  static AtomOperator lowering() { return {0.0, 0.5, Complex(0.0, -0.5), 0.0}; }
  static AtomOperator raising() { return {0.0, 0.5, Complex(0.0, 0.5), 0.0}; }
  // (I + s.sigma) / 2
  static AtomOperator density(const AtomState& s) { return {0.5, 0.5 * s.x, 0.5 * s.y, 0.5 * s.z}; }

  AtomOperator adjoint() const {
    return {std::conj(a0), std::conj(ax), std::conj(ay), std::conj(az)};
  }
  Complex trace() const { return 2.0 * a0; }
  bool is_hermitian(double tol = 1e-12) const;

  Matrix2c matrix() const;
  static AtomOperator from_matrix(const Matrix2c& m);

  AtomOperator& operator+=(const AtomOperator& o);
  AtomOperator& operator-=(const AtomOperator& o);
  friend AtomOperator operator+(AtomOperator a, const AtomOperator& b) { return a += b; }
  friend AtomOperator operator-(AtomOperator a, const AtomOperator& b) { return a -= b; }
  friend AtomOperator operator*(Complex c, const AtomOperator& a) {
    return {c * a.a0, c * a.ax, c * a.ay, c * a.az};
  }
  friend AtomOperator operator*(const AtomOperator& a, const AtomOperator& b);
};

Matrix2c bloch_to_matrix(const AtomState& s);
// Real parts of Tr[rho sigma_i]; the caller is responsible for rho being Hermitian.
AtomState matrix_to_bloch(const Matrix2c& rho);

// Operator-valued superoperators; these accept any operator B, not only states.
AtomOperator apply_dissipator(const AtomOperator& a, const AtomOperator& b);
AtomOperator apply_commutator(const AtomOperator& h, const AtomOperator& b);  // -i[H, B]

// Projection of a traceless operator onto Bloch-tangent components, 2 Re(b_i).
BlochTangent tangent_of(const AtomOperator& delta);

// D[A]rho = A rho A^+ - (A^+ A rho + rho A^+ A) / 2
BlochTangent dissipator(const AtomOperator& a, const AtomState& s);
// H[A]rho = A rho + rho A^+ - Tr[A rho + rho A^+] rho
BlochTangent measurement_superop(const AtomOperator& a, const AtomState& s);
// -i[H, rho]; throws ParameterError unless H is Hermitian.
BlochTangent hamiltonian_flow(const AtomOperator& h, const AtomState& s);

}  // namespace inloop
