#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace emgdecon {

inline constexpr double kSampleRate = 2000.0;
inline constexpr std::size_t kSegmentLength = 1000;

// A single-channel uniformly sampled signal. Samples are finite, rate > 0,
// length >= 1; the constructor enforces all three.
class SampledSignal {
public:
  SampledSignal(std::vector<double> samples, double rate);

  [[nodiscard]] std::span<const double> samples() const { return samples_; }
  [[nodiscard]] double rate() const { return rate_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] double duration() const { return static_cast<double>(samples_.size()) / rate_; }
  [[nodiscard]] double operator[](std::size_t i) const { return samples_[i]; }

  bool operator==(const SampledSignal&) const = default;

private:
  std::vector<double> samples_;
  double rate_;
};

// One 500 ms RL timestep: exactly 1000 samples at 2 kHz.
class Segment {
public:
  Segment(std::vector<double> samples, std::size_t index);

  [[nodiscard]] std::span<const double> samples() const { return samples_; }
  [[nodiscard]] std::size_t index() const { return index_; }
  [[nodiscard]] static constexpr double rate() { return kSampleRate; }
  [[nodiscard]] static constexpr std::size_t size() { return kSegmentLength; }

  bool operator==(const Segment&) const = default;

private:
  std::vector<double> samples_;
  std::size_t index_;
};

// Generates the surrogate clean sEMG: Gaussian noise with a spectral bump
// inside 20-450 Hz, amplitude-modulated by a slow positive burst envelope.
struct CleanSynthConfig {
  double peak_hz = 110.0;
  double width_hz = 30.0;
  double band_lo_hz = 20.0;
  double band_hi_hz = 450.0;
  double rise_hz = 15.0;  // raised-cosine roll-on above band_lo_hz
  double fall_hz = 30.0;  // raised-cosine roll-off below band_hi_hz
  double envelope_depth = 0.4;
};

SampledSignal synth_clean_semg(double duration_s, std::uint64_t seed,
                               const CleanSynthConfig& cfg = {});

// Non-overlapping 1000-sample segments. A trailing remainder is discarded
// with a warning on stderr; `discarded` (if given) receives its length.
std::vector<Segment> segment_signal(const SampledSignal& sig,
                                    std::size_t* discarded = nullptr);

SampledSignal concatenate(std::span<const Segment> segments);

double mean_square(std::span<const double> x);

}  // namespace emgdecon
