#include "emgdecon/purity.hpp"

#include <algorithm>
#include <cmath>

#include "emgdecon/error.hpp"

namespace emgdecon {

std::size_t QualityReport::good_count() const {
  return static_cast<std::size_t>(
      std::count_if(windows.begin(), windows.end(), [](const WindowQuality& w) { return w.good; }));
}

bool window_is_good(const FeatureVector& fv, const PurityThresholds& t) {
  return fv.smr >= t.smr_min_db && fv.snr >= t.snr_min_db && fv.dpr >= t.dpr_min_db &&
         fv.def <= t.def_max;
}

QualityReport make_quality_report(std::vector<WindowQuality> windows) {
  QualityReport r;
  r.windows = std::move(windows);
  if (!r.windows.empty()) {
    r.percent_good = 100.0 * static_cast<double>(r.good_count()) /
                     static_cast<double>(r.windows.size());
  }
  return r;
}

QualityReport purity_check(const SampledSignal& sig, const SpectralReference& ref,
                           const PurityThresholds& t, const FeatureConfig& cfg, double window_s) {
  const auto win = static_cast<std::size_t>(std::llround(window_s * sig.rate()));
  if (win == 0 || sig.size() < win) {
    throw PreconditionError("purity_check: signal shorter than one purity window");
  }
  std::vector<WindowQuality> out;
  const auto s = sig.samples();
  for (std::size_t i = 0; (i + 1) * win <= sig.size(); ++i) {
    const auto fv = extract_features(s.subspan(i * win, win), sig.rate(), ref, cfg);
    out.push_back({i, window_is_good(fv, t), fv.smr, fv.snr, fv.dpr, fv.def});
  }
  return make_quality_report(std::move(out));
}

QualityReport purity_check(const SampledSignal& sig) {
  return purity_check(sig, make_spectral_reference(sig));
}

}  // namespace emgdecon
