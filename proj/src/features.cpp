#include "emgdecon/features.hpp"

#include <algorithm>
#include <cmath>

#include "emgdecon/error.hpp"

namespace emgdecon {

FeatureVector FeatureVector::from_array(std::span<const double> v) {
  if (v.size() != kFeatureCount) throw PreconditionError("FeatureVector: expected 6 values");
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

double mean_frequency(const PowerSpectrum& psd) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    num += psd.freqs[k] * psd.power[k];
    den += psd.power[k];
  }
  if (!(den > 0.0)) throw NumericError("mean_frequency: zero-energy spectrum");
  return num / den;
}

SpectralReference make_spectral_reference(const SampledSignal& clean, const FeatureConfig& cfg) {
  SpectralReference ref;
  ref.psd = welch_psd(clean.samples(), clean.rate(), cfg.welch);
  ref.mean_freq = mean_frequency(ref.psd);
  return ref;
}

namespace {

double ratio_db(double num, double den, double clamp) {
  if (!(num > 0.0) && !(den > 0.0)) return 0.0;
  if (!(den > 0.0)) return clamp;
  if (!(num > 0.0)) return -clamp;
  return std::clamp(10.0 * std::log10(num / den), -clamp, clamp);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

FeatureVector features_from_psd(const PowerSpectrum& psd, const SpectralReference& ref,
                                const FeatureConfig& cfg) {
  if (!(psd.total() > 0.0)) throw NumericError("extract_features: zero-energy segment");
  if (!(ref.mean_freq > 0.0)) throw PreconditionError("extract_features: invalid spectral reference");

  const double df = psd.bin_width();
  const double pli_reach = cfg.pli_halfwidth + cfg.pli_leakage_bins * df;
  auto is_pli = [&](double f) {
    for (int h = 1; h <= cfg.pli_harmonics; ++h) {
      if (std::abs(f - cfg.pli_base * h) <= pli_reach) return true;
    }
    return false;
  };

  double emg = 0.0, emg_clear = 0.0, pli = 0.0, peak = 0.0;
  std::vector<double> band;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    const double f = psd.freqs[k];
    const double p = psd.power[k];
    const bool in_band = f >= cfg.emg_lo && f <= cfg.emg_hi;
    if (in_band) {
      emg += p;
      band.push_back(p);
      peak = std::max(peak, p);
    }
    if (is_pli(f)) {
      pli += p;
    } else if (in_band) {
      emg_clear += p;
    }
  }
  emg *= df;
  emg_clear *= df;
  pli *= df;

  const double c = cfg.clamp_db;
  FeatureVector fv;
  fv.smr = ratio_db(emg, psd.integrate(0.0, cfg.motion_hi), c);
  fv.snr = ratio_db(emg, psd.integrate(cfg.noise_lo, psd.freqs.back()), c);
  fv.spr = ratio_db(emg_clear, pli, c);
  fv.ser = ratio_db(emg, psd.integrate(cfg.ecg_lo, cfg.ecg_hi), c);
  fv.dpr = ratio_db(peak, median(std::move(band)), c);
  const double mnf = mean_frequency(psd);
  fv.def = std::max(mnf, ref.mean_freq) / std::min(mnf, ref.mean_freq);
  return fv;
}

FeatureVector extract_features(std::span<const double> x, double rate,
                               const SpectralReference& ref, const FeatureConfig& cfg) {
  return features_from_psd(welch_psd(x, rate, cfg.welch), ref, cfg);
}

FeatureVector extract_features(const Segment& seg, const SpectralReference& ref,
                               const FeatureConfig& cfg) {
  return extract_features(seg.samples(), Segment::rate(), ref, cfg);
}

FeatureVector affected_features(const Segment& seg, FilterAction action,
                                const SpectralReference& ref, const FilterBank& bank,
                                const FeatureConfig& cfg) {
  return extract_features(apply_filter(bank.get(action), seg).segment, ref, cfg);
}

FeatureVector affected_features(const Segment& seg, FilterAction action,
                                const SpectralReference& ref) {
  return affected_features(seg, action, ref, default_filter_bank());
}

}  // namespace emgdecon
