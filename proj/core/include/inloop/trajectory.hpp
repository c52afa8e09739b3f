#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "inloop/loop_field.hpp"
#include "inloop/pauli.hpp"

namespace inloop {

// Conditioned homodyne evolution of the in-loop atom with a finite-delay loop filter.
//
// The laser amplitude beta only ever appears as 2 beta phi, so the modulator drive is
// carried as Phi = 2 beta phi = (g/sqrt(eps)) int h(s) I(t - s) ds. The feedback
// Hamiltonian is H_fb = (sqrt(eta)/2) Phi sigma_y and the homodyne current is
// I = sqrt(eta eps) x + sqrt(eps) Phi + dW/dt.

struct TrajectoryConfig {
  LoopConfig loop;
  double dt = 1e-4;
  double duration = 3.0;
  std::size_t n_traj = 1000;
  std::uint64_t seed = 0;
  bool record_current = false;  // keep I and Phi of trajectory 0
  AtomState initial{1.0, 0.0, 0.0};
  double sample_interval = 0.01;  // spacing of the ensemble-mean output
  double phi_guard = 1e6;  // |Phi| above this aborts the run as unstable
  unsigned threads = 1;

  // Throws ParameterError or InstabilityError.
  void validate() const;
};

struct CurrentRecord {
  double dt = 0.0;
  std::vector<double> current;  // I_hom at step resolution
  std::vector<double> drive;    // Phi = 2 beta phi
};

double mean_current(const AtomState& s, double drive, double eta, double eps);

// Euler-Maruyama increment of the Ito equation
//   d rho = D[sigma]rho dt + sqrt(eta eps) dW H[sigma]rho - i[H_fb, rho] dt.
BlochTangent conditioned_increment(const AtomState& s, double drive, double dW, double dt,
                                   double eta, double eps);

// One step of the same equation in completely positive form:
//   rho' ~ M rho M^+ + (1 - eta eps) dt sigma rho sigma^+,
//   M = (I - sigma^+ sigma dt/2 + sqrt(eta eps) dY sigma) exp(-i H_fb dt),
//   dY = sqrt(eta eps) x dt + dW,
// renormalized to unit trace. Its mean over dW matches conditioned_increment to O(dt^2);
// pathwise the two differ by eta eps (dW^2 - dt) sigma rho sigma^+, the size of the
// Euler-Maruyama error itself. Unlike Euler-Maruyama it never leaves the Bloch ball.
// A residual overshoot up to 1e-6 in x^2+y^2+z^2 is projected back onto the sphere;
// anything larger throws StepSizeError.
AtomState step_conditioned(const AtomState& s, double drive, double dW, double dt, double eta,
                           double eps);

// Phi_k from the currents history[0..k-1] (strictly past samples). Zero during the loop
// warm-up k dt < tau. Throws ParameterError if k exceeds the history length.
double feedback_drive(std::span<const double> history, const LoopFilter& filter, double dt,
                      double g, double eps, std::size_t k);

struct EnsembleResult {
  std::vector<double> t;
  std::vector<double> mean_x, mean_y, mean_z;
  std::vector<double> se_x, se_y, se_z;
  std::size_t n_traj = 0;
  // Per-trajectory samples, row-major [trajectory][sample].
  std::vector<double> samples_x, samples_y, samples_z;
  std::optional<CurrentRecord> current;
  double max_radius_squared = 0.0;
};

// Bitwise deterministic in (config, seed) independent of the thread count: trajectory i
// draws from its own stream seeded by mix(mix(seed) + i), and means are pairwise-tree sums in
// trajectory order.
EnsembleResult run_ensemble(const TrajectoryConfig& config);

enum class BlochComponent { x, y, z };

struct DecayFit {
  double rate = 0.0;
  double std_error = 0.0;
};

// Slope of log(mean) over t in [t_lo, t_hi]; the error is the spread over `resamples`
// bootstrap resamplings of the trajectories.
DecayFit fit_decay_rate(const EnsembleResult& result, BlochComponent component,
                        double t_lo = 0.5, double t_hi = 3.0, std::size_t resamples = 100,
                        std::uint64_t seed = 0x5eed);

// Pairwise (tree) summation; the order depends only on the length.
double pairwise_sum(std::span<const double> values);

std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace inloop
