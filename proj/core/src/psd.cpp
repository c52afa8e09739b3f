#include "inloop/psd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "inloop/errors.hpp"
#include "fftw_support.hpp"

namespace inloop {

namespace detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

PsdEstimate welch_psd(std::span<const double> samples, double dt, std::size_t min_segments) {
  if (min_segments == 0) min_segments = 1;
  // n_seg = (N - L)/(L/2) + 1 >= min_segments  <=>  L <= 2N/(min_segments + 1)
  const std::size_t limit = 2 * samples.size() / (min_segments + 1);
  if (limit < 16) {
    throw ParameterError("record too short for the requested number of Welch segments");
  }
  std::size_t length = 16;
  while (2 * length <= limit) length *= 2;
  const std::size_t hop = length / 2;
  const std::size_t segments = (samples.size() - length) / hop + 1;

  std::vector<double> window(length);
  for (std::size_t i = 0; i < length; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(length));
  }
  const double power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0) /
                       static_cast<double>(length);
  const double scale = dt / (static_cast<double>(length) * power);

  const std::size_t bins = length / 2 + 1;
  std::vector<double> in(length);
  std::vector<fftw_complex> out(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(length), in.data(), out.data(), FFTW_ESTIMATE);
  }

  // A per-segment mean would leak into bin 1 through the window and bias it low by 1/6
  // for a flat spectrum; the record-wide mean does not.
  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());

  PsdEstimate est;
  est.segment_values.resize(segments * bins);
  std::vector<double> sum(bins, 0.0);
  std::vector<double> sum_sq(bins, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    const double* seg = samples.data() + s * hop;
    for (std::size_t i = 0; i < length; ++i) in[i] = (seg[i] - mean) * window[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) {
      const double p = scale * (out[k][0] * out[k][0] + out[k][1] * out[k][1]);
      est.segment_values[s * bins + k] = p;
      sum[k] += p;
      sum_sq[k] += p * p;
    }
  }
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  est.segments = segments;
  est.segment_length = length;
  const auto n = static_cast<double>(segments);
  for (std::size_t k = 0; k < bins; ++k) {
    const double mean = sum[k] / n;
    const double var = std::max(0.0, sum_sq[k] / n - mean * mean);
    est.omega.push_back(2.0 * std::numbers::pi * static_cast<double>(k) /
                        (static_cast<double>(length) * dt));
    est.value.push_back(mean);
    est.std_error.push_back(std::sqrt(var / n));
  }
  return est;
}

BandAverage band_average(const PsdEstimate& psd, double lo, double hi) {
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < psd.omega.size(); ++k) {
    if (psd.omega[k] >= lo && psd.omega[k] <= hi) members.push_back(k);
  }
  if (members.empty()) {
    throw ParameterError("no PSD bins inside the requested band");
  }
  BandAverage band;
  band.bins = members.size();
  const std::size_t bins = psd.omega.size();
  const auto n_bins = static_cast<double>(members.size());
  // Neighbouring Hann bins are correlated, so the error comes from the scatter of the
  // per-segment band means rather than from the per-bin errors.
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < psd.segments; ++s) {
    double m = 0.0;
    for (std::size_t k : members) m += psd.segment_values[s * bins + k];
    m /= n_bins;
    sum += m;
    sum_sq += m * m;
  }
  const auto n = static_cast<double>(psd.segments);
  band.mean = sum / n;
  band.std_error = std::sqrt(std::max(0.0, sum_sq / n - band.mean * band.mean) / n);
  return band;
}

}  // namespace inloop
