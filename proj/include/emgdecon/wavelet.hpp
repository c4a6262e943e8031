#pragma once

#include <span>
#include <string>
#include <vector>

#include "emgdecon/signal.hpp"

namespace emgdecon {

enum class WaveletFamily { Db4, Sym4 };

std::string to_string(WaveletFamily w);

struct WaveletFilters {
  std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
};

const WaveletFilters& wavelet_filters(WaveletFamily w);

// Single level, symmetric (half-sample) extension. Output length is
// floor((N + F - 1) / 2) for each band.
struct DwtBands {
  std::vector<double> approx;
  std::vector<double> detail;
};
DwtBands dwt(std::span<const double> x, const WaveletFilters& w);
// Output length 2 * len - F + 2.
std::vector<double> idwt(std::span<const double> approx, std::span<const double> detail,
                         const WaveletFilters& w);

int dwt_max_level(std::size_t n, std::size_t filter_len);

// [cA_L, cD_L, ..., cD_1]
std::vector<std::vector<double>> wavedec(std::span<const double> x, WaveletFamily w, int levels);
// Result is truncated to `length` samples.
std::vector<double> waverec(const std::vector<std::vector<double>>& coeffs, WaveletFamily w,
                            std::size_t length);

double soft_threshold(double v, double t);

struct WaveletDenoiser {
  WaveletFamily family = WaveletFamily::Db4;
  int levels = 3;
  // Multiplies the universal threshold; 0 disables thresholding.
  double threshold_scale = 1.0;
};

// sigma = median(|cD_1|) / 0.6745, threshold sigma * sqrt(2 ln N), soft,
// applied to every detail band.
std::vector<double> wavelet_denoise(std::span<const double> x, const WaveletDenoiser& spec);
Segment wavelet_denoise(const Segment& seg, const WaveletDenoiser& spec);

}  // namespace emgdecon
