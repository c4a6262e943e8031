#pragma once

#include <cstddef>
#include <vector>

#include "emgdecon/features.hpp"
#include "emgdecon/signal.hpp"

namespace emgdecon {

// Acceptable ranges for a clean window.
struct PurityThresholds {
  double smr_min_db = 12.0;
  double snr_min_db = 15.0;
  double dpr_min_db = 30.0;
  double def_max = 1.4;
};

struct WindowQuality {
  std::size_t index = 0;
  bool good = false;
  double smr = 0.0;
  double snr = 0.0;
  double dpr = 0.0;
  double def = 0.0;
};

struct QualityReport {
  std::vector<WindowQuality> windows;
  double percent_good = 0.0;

  [[nodiscard]] std::size_t good_count() const;
};

bool window_is_good(const FeatureVector& fv, const PurityThresholds& t = {});

// Builds the report and its percentage from per-window results.
QualityReport make_quality_report(std::vector<WindowQuality> windows);

// Checks consecutive 1 s windows (trailing partial window ignored).
QualityReport purity_check(const SampledSignal& sig, const SpectralReference& ref,
                           const PurityThresholds& t = {}, const FeatureConfig& cfg = {},
                           double window_s = 1.0);
// Uses the signal's own mean frequency as the DEF reference.
QualityReport purity_check(const SampledSignal& sig);

}  // namespace emgdecon
