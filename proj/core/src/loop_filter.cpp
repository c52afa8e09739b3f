#include "inloop/loop_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <fftw3.h>

#include "inloop/errors.hpp"
#include "fftw_support.hpp"

namespace inloop {

namespace {

constexpr Complex kI{0.0, 1.0};

double sinc(double x) {
  if (std::abs(x) < 1e-6) {
    return 1.0 - x * x / 6.0;
  }
  return std::sin(x) / x;
}

void require_positive_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ParameterError("filter delay tau must be positive, got " + std::to_string(tau));
  }
}

std::size_t steps_covering(double span, double dt) {
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

// Total change in arg(values[k]) going around the closed sampled contour.
double winding_number(const std::vector<Complex>& values) {
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Complex next = values[(k + 1) % values.size()];
    total += std::arg(next / values[k]);
  }
  return total / (2.0 * std::numbers::pi);
}

}  // namespace

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::rectangular: return "rectangular";
    case FilterKind::exponential: return "exponential";
    case FilterKind::single_pole: return "single-pole";
    case FilterKind::sampled: return "sampled";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(std::string_view name) {
  if (name == "rectangular") return FilterKind::rectangular;
  if (name == "exponential") return FilterKind::exponential;
  if (name == "single-pole" || name == "single_pole") return FilterKind::single_pole;
  if (name == "sampled" || name == "user-sampled") return FilterKind::sampled;
  throw ParameterError("unknown filter kind '" + std::string(name) + "'");
}

LoopFilter LoopFilter::rectangular(double tau) {
  require_positive_tau(tau);
  return LoopFilter(FilterKind::rectangular, tau);
}

LoopFilter LoopFilter::exponential(double tau, double time_constant) {
  require_positive_tau(tau);
  if (!(time_constant > 0.0)) {
    throw ParameterError("exponential filter time constant must be positive");
  }
  LoopFilter f(FilterKind::exponential, tau);
  f.time_constant_ = time_constant;
  return f;
}

LoopFilter LoopFilter::single_pole(double tau) {
  require_positive_tau(tau);
  LoopFilter f(FilterKind::single_pole, tau);
  f.time_constant_ = tau;
  return f;
}

LoopFilter LoopFilter::sampled(std::vector<double> bins, double tau) {
  require_positive_tau(tau);
  if (bins.empty()) {
    throw ParameterError("sampled filter needs at least one bin");
  }
  if (std::any_of(bins.begin(), bins.end(), [](double v) { return !(v >= 0.0); })) {
    throw ParameterError("sampled filter bins must be nonnegative");
  }
  const double width = tau / static_cast<double>(bins.size());
  const double area = std::accumulate(bins.begin(), bins.end(), 0.0) * width;
  if (!(area > 0.0)) {
    throw ParameterError("sampled filter has zero area");
  }
  for (double& v : bins) v /= area;
  LoopFilter f(FilterKind::sampled, tau);
  f.bins_ = std::move(bins);
  return f;
}

double LoopFilter::value(double s) const {
  if (s < 0.0) return 0.0;
  switch (kind_) {
    case FilterKind::rectangular:
      return s <= tau_ ? 1.0 / tau_ : 0.0;
    case FilterKind::exponential: {
      if (s > tau_) return 0.0;
      const double norm = -std::expm1(-tau_ / time_constant_);
      return std::exp(-s / time_constant_) / (time_constant_ * norm);
    }
    case FilterKind::single_pole:
      return std::exp(-s / tau_) / tau_;
    case FilterKind::sampled: {
      if (s >= tau_) return 0.0;
      const double width = tau_ / static_cast<double>(bins_.size());
      return bins_[std::min(bins_.size() - 1, static_cast<std::size_t>(s / width))];
    }
  }
  return 0.0;
}

double LoopFilter::cumulative(double s) const {
  if (s <= 0.0) return 0.0;
  switch (kind_) {
    case FilterKind::rectangular:
      return std::min(s, tau_) / tau_;
    case FilterKind::exponential: {
      const double u = std::min(s, tau_);
      return std::expm1(-u / time_constant_) / std::expm1(-tau_ / time_constant_);
    }
    case FilterKind::single_pole:
      return -std::expm1(-s / tau_);
    case FilterKind::sampled: {
      if (s >= tau_) return 1.0;
      const double width = tau_ / static_cast<double>(bins_.size());
      const auto full = static_cast<std::size_t>(s / width);
      double acc = 0.0;
      for (std::size_t j = 0; j < full; ++j) acc += bins_[j] * width;
      if (full < bins_.size()) acc += bins_[full] * (s - static_cast<double>(full) * width);
      return acc;
    }
  }
  return 0.0;
}

Complex LoopFilter::transfer(double omega) const {
  switch (kind_) {
    case FilterKind::rectangular: {
      const double half = 0.5 * omega * tau_;
      return std::exp(kI * half) * sinc(half);
    }
    case FilterKind::exponential: {
      const double rate = 1.0 / time_constant_;
      const Complex k = kI * omega - rate;
      const double norm = -std::expm1(-tau_ * rate);
      return (std::exp(k * tau_) - 1.0) / (k * time_constant_ * norm);
    }
    case FilterKind::single_pole:
      return 1.0 / (1.0 - kI * omega * tau_);
    case FilterKind::sampled: {
      const double width = tau_ / static_cast<double>(bins_.size());
      const double envelope = width * sinc(0.5 * omega * width);
      Complex acc = 0.0;
      for (std::size_t j = 0; j < bins_.size(); ++j) {
        acc += bins_[j] * std::exp(kI * (omega * (static_cast<double>(j) + 0.5) * width));
      }
      return acc * envelope;
    }
  }
  return 0.0;
}

DiscreteFilter::DiscreteFilter(const LoopFilter& filter, double dt) {
  if (!(dt > 0.0)) {
    throw ParameterError("time step must be positive");
  }
  warmup_ = std::max<std::size_t>(1, steps_covering(filter.tau(), dt));
  if (filter.kind() == FilterKind::single_pole) {
    recursive_ = true;
    pole_ = std::exp(-dt / filter.tau());
    return;
  }
  const std::size_t m = warmup_;
  taps_.resize(m);
  for (std::size_t j = 1; j <= m; ++j) {
    taps_[j - 1] = filter.cumulative(static_cast<double>(j) * dt) -
                   filter.cumulative(static_cast<double>(j - 1) * dt);
  }
  const double first = taps_.front();
  uniform_ = std::all_of(taps_.begin(), taps_.end(),
                         [first](double w) { return std::abs(w - first) <= 1e-12 * first; });
  ring_.assign(m, 0.0);
}

void DiscreteFilter::reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
  head_ = 0;
  count_ = 0;
  since_recompute_ = 0;
  running_sum_ = 0.0;
  value_ = 0.0;
}

void DiscreteFilter::push(double sample) {
  ++count_;
  if (recursive_) {
    value_ = pole_ * value_ + (1.0 - pole_) * sample;
    return;
  }
  const std::size_t m = ring_.size();
  // ring_[head_] holds the oldest sample; it leaves the window now.
  running_sum_ += sample - ring_[head_];
  ring_[head_] = sample;
  head_ = (head_ + 1) % m;
  if (uniform_) {
    if (++since_recompute_ >= m) {
      running_sum_ = std::accumulate(ring_.begin(), ring_.end(), 0.0);
      since_recompute_ = 0;
    }
    value_ = taps_.front() * running_sum_;
  } else {
    recompute();
  }
}

void DiscreteFilter::recompute() {
  // Most recent sample sits just before head_ and carries tap w_1.
  const std::size_t m = ring_.size();
  double acc = 0.0;
  std::size_t idx = (head_ + m - 1) % m;
  for (std::size_t j = 0; j < m; ++j) {
    acc += taps_[j] * ring_[idx];
    idx = (idx + m - 1) % m;
  }
  value_ = acc;
}

Complex DiscreteFilter::response(double theta) const {
  const Complex z_inv = std::exp(-kI * theta);
  if (recursive_) {
    return (1.0 - pole_) * z_inv / (1.0 - pole_ * z_inv);
  }
  Complex acc = 0.0;
  Complex power = z_inv;
  for (double w : taps_) {
    acc += w * power;
    power *= z_inv;
  }
  return acc;
}

bool discrete_loop_stable(const DiscreteFilter& line, double g) {
  if (g == 0.0) return true;
  std::vector<Complex> contour;
  if (line.taps().empty()) {
    const std::size_t n = 8192;
    contour.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      contour.push_back(1.0 - g * line.response(theta));
    }
  } else {
    // FIR response on a uniform theta grid is a zero-padded DFT of the taps.
    std::size_t n = 8192;
    while (n < 32 * line.taps().size()) n *= 2;
    std::vector<Complex> buffer(n, 0.0);
    for (std::size_t j = 0; j < line.taps().size(); ++j) buffer[j + 1] = line.taps()[j];
    auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
    fftw_plan plan;
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      plan = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    contour.reserve(n);
    for (const Complex& w : buffer) contour.push_back(1.0 - g * w);
  }
  const double closest = std::abs(*std::min_element(
      contour.begin(), contour.end(),
      [](const Complex& a, const Complex& b) { return std::abs(a) < std::abs(b); }));
  if (closest < 1e-9) return false;
  return std::abs(winding_number(contour)) < 0.5;
}

}  // namespace inloop
