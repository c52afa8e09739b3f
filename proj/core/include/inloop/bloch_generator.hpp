#pragma once

#include <functional>

#include <Eigen/Core>

#include "inloop/pauli.hpp"

namespace inloop {

// Trace-preserving Liouvillian of a single qubit, in Bloch form:
//   ds/dt = drift * s + constant.
// Acting on a general (possibly non-Hermitian) operator B = (b0 I + b.sigma)/2 it is
// the linear map (b0, b) -> (0, constant * b0 + drift * b), see affine().
class BlochGenerator {
 public:
  using Superoperator = std::function<AtomOperator(const AtomOperator&)>;

  BlochGenerator() = default;
  BlochGenerator(const Eigen::Matrix3d& drift, const Eigen::Vector3d& constant)
      : drift_(drift), constant_(constant) {}

  // Samples the superoperator on I/2 and sigma_i/2. Throws ParameterError if the
  // superoperator leaks trace.
  static BlochGenerator from_superoperator(const Superoperator& liouvillian);

  const Eigen::Matrix3d& drift() const { return drift_; }
  const Eigen::Vector3d& constant() const { return constant_; }

  BlochTangent apply(const AtomState& s) const;

  // 4x4 real matrix on (b0, bx, by, bz).
  Eigen::Matrix4d affine() const;

  Eigen::Vector3cd drift_eigenvalues() const;

  // Solves drift * s = -constant. Throws ParameterError if the drift is singular.
  AtomState stationary_state() const;

  // exp(affine * t) applied to s, evaluated with a matrix exponential.
  AtomState propagate(const AtomState& s, double t) const;

  BlochGenerator operator+(const BlochGenerator& o) const {
    return {drift_ + o.drift_, constant_ + o.constant_};
  }

 private:
  Eigen::Matrix3d drift_ = Eigen::Matrix3d::Zero();
  Eigen::Vector3d constant_ = Eigen::Vector3d::Zero();
};

// Smallest eigenvalue of the Choi matrix of exp(generator * dt). Nonnegative (up to
// rounding) iff the small-time map is completely positive.
double choi_min_eigenvalue(const BlochGenerator& generator, double dt);

}  // namespace inloop
