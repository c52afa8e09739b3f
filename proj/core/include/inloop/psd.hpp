#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace inloop {

// Welch estimate of the two-sided power spectral density
//   S(omega) = int <x(t) x(0)> exp(i omega t) dt,
// reported on omega >= 0. Unit-variance-density white noise (variance 1/dt per sample)
// has S = 1.
struct PsdEstimate {
  std::vector<double> omega;
  std::vector<double> value;
  std::vector<double> std_error;  // spread across segments / sqrt(segments)
  std::size_t segments = 0;
  std::size_t segment_length = 0;
  std::vector<double> segment_values;  // periodograms, row-major [segment][bin]
};

// Hann window, 50% overlap, record mean removed. The segment length is the
// largest power of two that still yields at least `min_segments` segments.
PsdEstimate welch_psd(std::span<const double> samples, double dt, std::size_t min_segments = 100);

// Mean of the estimate over bins with lo <= omega <= hi, and its standard error.
struct BandAverage {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t bins = 0;
};
BandAverage band_average(const PsdEstimate& psd, double lo, double hi);

}  // namespace inloop
