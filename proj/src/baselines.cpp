#include "emgdecon/baselines.hpp"

#include "emgdecon/error.hpp"

namespace emgdecon {

std::string to_string(BaselineKind b) {
  switch (b) {
    case BaselineKind::WD_db4: return "WD_db4";
    case BaselineKind::WD_sym4: return "WD_sym4";
    case BaselineKind::NF: return "NF";
    case BaselineKind::LPF: return "LPF";
    case BaselineKind::HPF: return "HPF";
  }
  throw PreconditionError("bad baseline kind");
}

BaselineKind baseline_from_string(std::string_view s) {
  for (BaselineKind b : kAllBaselines) {
    if (to_string(b) == s) return b;
  }
  throw PreconditionError("unknown baseline: " + std::string(s));
}

SampledSignal static_baseline(BaselineKind kind, const SampledSignal& noisy,
                              const FilterBank& bank, const WaveletDenoiser& wd) {
  const auto segs = segment_signal(noisy);
  std::vector<Segment> out;
  out.reserve(segs.size());
  for (const auto& s : segs) {
    switch (kind) {
      case BaselineKind::WD_db4:
      case BaselineKind::WD_sym4: {
        WaveletDenoiser spec = wd;
        spec.family = kind == BaselineKind::WD_db4 ? WaveletFamily::Db4 : WaveletFamily::Sym4;
        out.push_back(wavelet_denoise(s, spec));
        break;
      }
      case BaselineKind::NF:
        out.push_back(apply_filter(bank.get(FilterAction::NF), s).segment);
        break;
      case BaselineKind::LPF:
        out.push_back(apply_filter(bank.get(FilterAction::LPF), s).segment);
        break;
      case BaselineKind::HPF:
        out.push_back(apply_filter(bank.get(FilterAction::HPF), s).segment);
        break;
    }
  }
  return concatenate(out);
}

SampledSignal static_baseline(BaselineKind kind, const NoisyDataset& ds) {
  return static_baseline(kind, ds.noisy);
}

}  // namespace emgdecon
