#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emgdecon/signal.hpp"

namespace emgdecon {

// One-sided power spectral density (units^2 / Hz) on an ascending grid.
struct PowerSpectrum {
  std::vector<double> freqs;
  std::vector<double> power;

  [[nodiscard]] double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  // Rectangle-rule integral of the bins with lo <= f <= hi.
  [[nodiscard]] double integrate(double lo, double hi) const;
  [[nodiscard]] double total() const;
};

struct WelchConfig {
  std::size_t window_len = 256;
  double overlap = 0.5;
};

// Averaged Hann-windowed periodogram, density scaling, no detrending.
PowerSpectrum welch_psd(std::span<const double> x, double rate, const WelchConfig& cfg = {});
PowerSpectrum welch_psd(const Segment& seg, std::size_t window_len = 256, double overlap = 0.5);

}  // namespace emgdecon
