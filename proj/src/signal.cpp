#include "emgdecon/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "emgdecon/error.hpp"
#include "emgdecon/random.hpp"

namespace emgdecon {

SampledSignal::SampledSignal(std::vector<double> samples, double rate)
    : samples_(std::move(samples)), rate_(rate) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    throw PreconditionError("SampledSignal: rate must be positive");
  }
  if (samples_.empty()) throw PreconditionError("SampledSignal: empty signal");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw NumericError("SampledSignal: non-finite sample");
  }
}

Segment::Segment(std::vector<double> samples, std::size_t index)
    : samples_(std::move(samples)), index_(index) {
  if (samples_.size() != kSegmentLength) {
    throw PreconditionError("Segment: expected 1000 samples, got " +
                            std::to_string(samples_.size()));
  }
  for (double v : samples_) {
    if (!std::isfinite(v)) throw NumericError("Segment: non-finite sample");
  }
}

double mean_square(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

namespace {

double raised_cosine(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * t);
}

double clean_envelope(double f, const CleanSynthConfig& c) {
  if (f < c.band_lo_hz || f > c.band_hi_hz) return 0.0;
  const double bump = std::exp(-0.5 * std::pow((f - c.peak_hz) / c.width_hz, 2));
  const double rise = raised_cosine((f - c.band_lo_hz) / c.rise_hz);
  const double fall = raised_cosine((c.band_hi_hz - f) / c.fall_hz);
  return bump * rise * fall;
}

}  // namespace

SampledSignal synth_clean_semg(double duration_s, std::uint64_t seed,
                               const CleanSynthConfig& cfg) {
  if (!(duration_s > 0.0)) throw PreconditionError("synth_clean_semg: duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  if (n == 0) throw PreconditionError("synth_clean_semg: duration shorter than one sample");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> white(n);
  for (auto& w : white) w = normal(rng);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, white);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kk = std::min(k, n - k);
    const double f = static_cast<double>(kk) * kSampleRate / static_cast<double>(n);
    spec[k] *= std::sqrt(clean_envelope(f, cfg));
  }
  std::vector<std::complex<double>> shaped;
  fft.inv(shaped, spec);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double f1 = 0.5 + 0.5 * u01(rng);
  const double f2 = 1.2 + 0.8 * u01(rng);
  const double ph1 = 2.0 * std::numbers::pi * u01(rng);
  const double ph2 = 2.0 * std::numbers::pi * u01(rng);

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double env = 1.0 + cfg.envelope_depth * std::sin(2.0 * std::numbers::pi * f1 * t + ph1) +
                       0.6 * cfg.envelope_depth * std::sin(2.0 * std::numbers::pi * f2 * t + ph2);
    x[i] = shaped[i].real() * env;
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : x) v -= mean;
  const double rms = std::sqrt(mean_square(x));
  if (rms > 0.0) {
    for (double& v : x) v /= rms;
  }
  return SampledSignal(std::move(x), kSampleRate);
}

std::vector<Segment> segment_signal(const SampledSignal& sig, std::size_t* discarded) {
  if (sig.size() < kSegmentLength) {
    throw PreconditionError("segment_signal: signal shorter than one segment");
  }
  const std::size_t count = sig.size() / kSegmentLength;
  const std::size_t rest = sig.size() - count * kSegmentLength;
  if (rest != 0) {
    std::cerr << "warning: segment_signal discarded " << rest << " trailing samples\n";
  }
  if (discarded != nullptr) *discarded = rest;

  std::vector<Segment> out;
  out.reserve(count);
  const auto s = sig.samples();
  for (std::size_t i = 0; i < count; ++i) {
    auto first = s.begin() + static_cast<std::ptrdiff_t>(i * kSegmentLength);
    out.emplace_back(std::vector<double>(first, first + kSegmentLength), i);
  }
  return out;
}

SampledSignal concatenate(std::span<const Segment> segments) {
  if (segments.empty()) throw PreconditionError("concatenate: no segments");
  std::vector<double> out;
  out.reserve(segments.size() * kSegmentLength);
  for (const auto& seg : segments) {
    out.insert(out.end(), seg.samples().begin(), seg.samples().end());
  }
  return SampledSignal(std::move(out), kSampleRate);
}

}  // namespace emgdecon
