#pragma once

#include <array>
#include <string>
#include <string_view>

#include "emgdecon/contamination.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/wavelet.hpp"

namespace emgdecon {

enum class BaselineKind { WD_db4, WD_sym4, NF, LPF, HPF };

inline constexpr std::array<BaselineKind, 5> kAllBaselines = {
    BaselineKind::WD_db4, BaselineKind::WD_sym4, BaselineKind::NF, BaselineKind::LPF,
    BaselineKind::HPF};

std::string to_string(BaselineKind b);
BaselineKind baseline_from_string(std::string_view s);

// One fixed filter on every segment, each from zero state like the agent's
// actions.
SampledSignal static_baseline(BaselineKind kind, const SampledSignal& noisy,
                              const FilterBank& bank = default_filter_bank(),
                              const WaveletDenoiser& wd = {});
SampledSignal static_baseline(BaselineKind kind, const NoisyDataset& ds);

}  // namespace emgdecon
