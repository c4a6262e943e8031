#include "emgdecon/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "emgdecon/error.hpp"

namespace emgdecon {

double PowerSpectrum::integrate(double lo, double hi) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (freqs[k] >= lo && freqs[k] <= hi) acc += power[k];
  }
  return acc * bin_width();
}

double PowerSpectrum::total() const {
  double acc = 0.0;
  for (double p : power) acc += p;
  return acc * bin_width();
}

PowerSpectrum welch_psd(std::span<const double> x, double rate, const WelchConfig& cfg) {
  const std::size_t nw = cfg.window_len;
  if (nw < 2 || nw > x.size()) {
    throw PreconditionError("welch_psd: window length must be in [2, signal length]");
  }
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0)) {
    throw PreconditionError("welch_psd: overlap must be in [0, 1)");
  }
  if (!(rate > 0.0)) throw PreconditionError("welch_psd: rate must be positive");

  const auto step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(nw) * (1.0 - cfg.overlap))));

  // Periodic Hann.
  std::vector<double> window(nw);
  double wss = 0.0;
  for (std::size_t i = 0; i < nw; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(nw));
    wss += window[i] * window[i];
  }

  const std::size_t nbins = nw / 2 + 1;
  PowerSpectrum out;
  out.freqs.resize(nbins);
  out.power.assign(nbins, 0.0);
  for (std::size_t k = 0; k < nbins; ++k) {
    out.freqs[k] = static_cast<double>(k) * rate / static_cast<double>(nw);
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> frame(nw);
  std::vector<std::complex<double>> spec;
  std::size_t count = 0;
  for (std::size_t start = 0; start + nw <= x.size(); start += step) {
    for (std::size_t i = 0; i < nw; ++i) frame[i] = x[start + i] * window[i];
    fft.fwd(spec, frame);
    for (std::size_t k = 0; k < nbins; ++k) out.power[k] += std::norm(spec[k]);
    ++count;
  }

  const double scale = 1.0 / (rate * wss * static_cast<double>(count));
  for (std::size_t k = 0; k < nbins; ++k) {
    const bool edge = (k == 0) || (nw % 2 == 0 && k == nbins - 1);
    out.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return out;
}

PowerSpectrum welch_psd(const Segment& seg, std::size_t window_len, double overlap) {
  return welch_psd(seg.samples(), Segment::rate(), WelchConfig{window_len, overlap});
}

}  // namespace emgdecon
