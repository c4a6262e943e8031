#pragma once

#include <array>
#include <span>
#include <string_view>

#include "emgdecon/filters.hpp"
#include "emgdecon/signal.hpp"
#include "emgdecon/spectrum.hpp"

namespace emgdecon {

inline constexpr std::size_t kFeatureCount = 6;

// RL observation. Serialized order is always (DEF, DPR, SMR, SNR, SPR, SER).
struct FeatureVector {
  double def = 1.0;  // unitless, >= 1
  double dpr = 0.0;  // dB
  double smr = 0.0;
  double snr = 0.0;
  double spr = 0.0;
  double ser = 0.0;

  [[nodiscard]] std::array<double, kFeatureCount> to_array() const {
    return {def, dpr, smr, snr, spr, ser};
  }
  static FeatureVector from_array(std::span<const double> v);

  bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "DEF", "DPR", "SMR", "SNR", "SPR", "SER"};

// Mean frequency and averaged PSD of a long clean recording; DEF compares
// each window's mean frequency against it.
struct SpectralReference {
  double mean_freq = 0.0;
  PowerSpectrum psd;
};

struct FeatureConfig {
  WelchConfig welch{};
  double emg_lo = 20.0;
  double emg_hi = 450.0;
  double motion_hi = 20.0;
  double noise_lo = 500.0;
  double ecg_lo = 5.0;
  double ecg_hi = 15.0;
  double pli_base = 50.0;
  int pli_harmonics = 3;
  double pli_halfwidth = 2.5;
  // The Hann main lobe spans +-2 bins, so the PLI bins are widened by this
  // many bin widths on each side.
  double pli_leakage_bins = 2.0;
  double clamp_db = 80.0;
};

double mean_frequency(const PowerSpectrum& psd);

SpectralReference make_spectral_reference(const SampledSignal& clean,
                                          const FeatureConfig& cfg = {});

FeatureVector features_from_psd(const PowerSpectrum& psd, const SpectralReference& ref,
                                const FeatureConfig& cfg = {});

// Throws NumericError on an all-zero input.
FeatureVector extract_features(std::span<const double> x, double rate,
                               const SpectralReference& ref, const FeatureConfig& cfg = {});
FeatureVector extract_features(const Segment& seg, const SpectralReference& ref,
                               const FeatureConfig& cfg = {});

// Features of the segment after filtering it (from zero state) with `action`.
FeatureVector affected_features(const Segment& seg, FilterAction action,
                                const SpectralReference& ref, const FilterBank& bank,
                                const FeatureConfig& cfg = {});
FeatureVector affected_features(const Segment& seg, FilterAction action,
                                const SpectralReference& ref);

}  // namespace emgdecon
