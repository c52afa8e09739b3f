#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

namespace inloop {

using Complex = std::complex<double>;

enum class FilterKind {
  rectangular,  // h = 1/tau on [0, tau]
  exponential,  // h ~ exp(-s/time_constant), truncated to [0, tau] and renormalized
  single_pole,  // h = exp(-s/tau)/tau on [0, inf); tau is the time constant
  sampled,      // piecewise constant on n equal bins covering [0, tau]
};

std::string_view to_string(FilterKind kind);
// Accepts the names printed by to_string (and "single_pole"). Throws ParameterError.
FilterKind filter_kind_from_string(std::string_view name);

// Normalized, nonnegative loop response h(s), with int h(s) ds = 1.
// Transfer convention: h~(omega) = int h(s) exp(i omega s) ds, so h~(0) = 1.
class LoopFilter {
 public:
  static LoopFilter rectangular(double tau);
  static LoopFilter exponential(double tau, double time_constant);
  static LoopFilter single_pole(double tau);
  // Bin heights need not be normalized; they are rescaled to unit area.
  static LoopFilter sampled(std::vector<double> bins, double tau);

  FilterKind kind() const { return kind_; }
  double tau() const { return tau_; }
  double time_constant() const { return time_constant_; }
  const std::vector<double>& bins() const { return bins_; }
  bool finite_support() const { return kind_ != FilterKind::single_pole; }

  double value(double s) const;
  // int_0^s h(u) du
  double cumulative(double s) const;
  Complex transfer(double omega) const;

 private:
  LoopFilter(FilterKind kind, double tau) : kind_(kind), tau_(tau) {}

  FilterKind kind_;
  double tau_;
  double time_constant_ = 0.0;
  std::vector<double> bins_;
};

// Causal sampled realization of int h(s) I(t - s) ds on a time step dt, using only
// strictly past samples: out_k = sum_{j>=1} w_j I_{k-j}, w_j = H(j dt) - H((j-1) dt)
// with H the cumulative filter. single_pole runs as the equivalent one-pole recursion.
class DiscreteFilter {
 public:
  DiscreteFilter(const LoopFilter& filter, double dt);

  // Zero until the history spans the filter support (loop warm-up).
  double output() const { return warmed_up() ? value_ : 0.0; }
  bool warmed_up() const { return count_ >= warmup_; }
  void push(double sample);
  void reset();

  std::size_t warmup_steps() const { return warmup_; }
  // Tap weights w_1..w_m (empty for the recursive single-pole form).
  const std::vector<double>& taps() const { return taps_; }
  double pole() const { return pole_; }
  // W(e^{i theta}) = sum_j w_j e^{-i theta j}
  Complex response(double theta) const;

 private:
  void recompute();

  bool recursive_ = false;
  bool uniform_ = false;
  double pole_ = 0.0;
  std::vector<double> taps_;
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::size_t warmup_ = 0;
  std::size_t since_recompute_ = 0;
  double running_sum_ = 0.0;
  double value_ = 0.0;
};

// Stability of the sampled loop I_k = e_k + g * out_k: all zeros of 1 - g W(z) inside
// the unit circle, decided by the winding number of 1 - g W(e^{i theta}).
bool discrete_loop_stable(const DiscreteFilter& line, double g);

}  // namespace inloop
