#include "inloop/bloch_generator.hpp"

#include <array>
#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "inloop/errors.hpp"

namespace inloop {

namespace {

constexpr double kTraceLeakTolerance = 1e-12;

}  // namespace

BlochGenerator BlochGenerator::from_superoperator(const Superoperator& liouvillian) {
  const std::array<AtomOperator, 4> basis = {
      Complex(0.5) * AtomOperator::identity(), Complex(0.5) * AtomOperator::sigma_x(),
      Complex(0.5) * AtomOperator::sigma_y(), Complex(0.5) * AtomOperator::sigma_z()};

  Eigen::Matrix3d drift;
  Eigen::Vector3d constant;
  for (int j = 0; j < 4; ++j) {
    const AtomOperator image = liouvillian(basis[j]);
    if (std::abs(image.trace()) > kTraceLeakTolerance) {
      throw ParameterError("superoperator does not preserve trace");
    }
    const Eigen::Vector3d column = tangent_of(image).vector();
    if (j == 0) {
      constant = column;
    } else {
      drift.col(j - 1) = column;
    }
  }
  return {drift, constant};
}

BlochTangent BlochGenerator::apply(const AtomState& s) const {
  const Eigen::Vector3d v = drift_ * s.vector() + constant_;
  return {v.x(), v.y(), v.z()};
}

Eigen::Matrix4d BlochGenerator::affine() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<3, 1>(1, 0) = constant_;
  m.block<3, 3>(1, 1) = drift_;
  return m;
}

Eigen::Vector3cd BlochGenerator::drift_eigenvalues() const {
  return Eigen::EigenSolver<Eigen::Matrix3d>(drift_, false).eigenvalues();
}

AtomState BlochGenerator::stationary_state() const {
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(drift_);
  if (!lu.isInvertible()) {
    throw ParameterError("generator has no unique stationary state");
  }
  return AtomState::from_vector(lu.solve(-constant_));
}

AtomState BlochGenerator::propagate(const AtomState& s, double t) const {
  const Eigen::Matrix4d step = (affine() * t).exp();
  const Eigen::Vector4d v = step * Eigen::Vector4d(1.0, s.x, s.y, s.z);
  return {v(1), v(2), v(3)};
}

double choi_min_eigenvalue(const BlochGenerator& generator, double dt) {
  const Eigen::Matrix4d step = (generator.affine() * dt).exp();

  // J = sum_ij |i><j| (x) Phi(|i><j|), with Phi extended linearly to complex operators.
  Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Matrix2c unit = Matrix2c::Zero();
      unit(i, j) = 1.0;
      const AtomOperator op = AtomOperator::from_matrix(unit);
      // op = (b0 I + b.sigma)/2 with b = 2 * coefficients
      const Eigen::Vector4cd b(2.0 * op.a0, 2.0 * op.ax, 2.0 * op.ay, 2.0 * op.az);
      const Eigen::Vector4cd image = step.cast<Complex>() * b;
      const AtomOperator out{0.5 * image(0), 0.5 * image(1), 0.5 * image(2), 0.5 * image(3)};
      choi.block<2, 2>(2 * i, 2 * j) = out.matrix();
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(choi, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace inloop
