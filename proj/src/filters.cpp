#include "emgdecon/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "emgdecon/error.hpp"

namespace emgdecon {

std::string to_string(FilterAction a) {
  switch (a) {
    case FilterAction::HPF: return "HPF";
    case FilterAction::NF: return "NF";
    case FilterAction::LPF: return "LPF";
  }
  throw PreconditionError("unknown filter action");
}

FilterAction action_from_string(std::string_view s) {
  if (s == "HPF") return FilterAction::HPF;
  if (s == "NF") return FilterAction::NF;
  if (s == "LPF") return FilterAction::LPF;
  throw PreconditionError("unknown filter action: " + std::string(s));
}

namespace {

bool section_stable(const Biquad& s) {
  const double a1 = s.a[1], a2 = s.a[2];
  return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

double section_pole_radius(const Biquad& s) {
  const double a1 = s.a[1], a2 = s.a[2];
  const double disc = a1 * a1 - 4.0 * a2;
  if (disc < 0.0) return std::sqrt(a2);
  const double r = std::sqrt(disc);
  return std::max(std::abs((-a1 + r) / 2.0), std::abs((-a1 - r) / 2.0));
}

}  // namespace

IirFilter::IirFilter(std::vector<Biquad> sections, FilterDesignMeta meta)
    : sections_(std::move(sections)), meta_(std::move(meta)) {
  if (sections_.empty()) throw PreconditionError("IirFilter: no sections");
  for (const auto& s : sections_) {
    if (s.a[0] != 1.0) throw PreconditionError("IirFilter: section not normalized (a0 != 1)");
    for (double c : s.b) {
      if (!std::isfinite(c)) throw NumericError("IirFilter: non-finite coefficient");
    }
    if (!std::isfinite(s.a[1]) || !std::isfinite(s.a[2])) {
      throw NumericError("IirFilter: non-finite coefficient");
    }
    if (!section_stable(s)) throw NumericError("IirFilter: unstable section");
  }
}

double IirFilter::max_pole_radius() const {
  double r = 0.0;
  for (const auto& s : sections_) r = std::max(r, section_pole_radius(s));
  return r;
}

FilterState zero_state(const IirFilter& f) {
  return FilterState(f.sections().size(), std::array<double, 2>{0.0, 0.0});
}

std::vector<double> filter_samples(const IirFilter& f, std::span<const double> x,
                                   FilterState& state) {
  const auto secs = f.sections();
  if (state.size() != secs.size()) throw PreconditionError("filter_samples: state size mismatch");
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t k = 0; k < secs.size(); ++k) {
    const auto& s = secs[k];
    double z1 = state[k][0], z2 = state[k][1];
    for (double& v : y) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[1] * out + z2;
      z2 = s.b[2] * in - s.a[2] * out;
      v = out;
    }
    state[k] = {z1, z2};
  }
  return y;
}

FilteredSegment apply_filter(const IirFilter& f, const Segment& seg,
                             const std::optional<FilterState>& carry) {
  FilterState state = carry ? *carry : zero_state(f);
  auto y = filter_samples(f, seg.samples(), state);
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericError("apply_filter: non-finite output");
  }
  return {Segment(std::move(y), seg.index()), std::move(state)};
}

std::vector<double> magnitude_response(const IirFilter& f, std::span<const double> freqs_hz,
                                       double rate) {
  std::vector<double> out;
  out.reserve(freqs_hz.size());
  for (double fr : freqs_hz) {
    if (!(fr >= 0.0 && fr <= rate / 2.0)) {
      throw PreconditionError("magnitude_response: frequency outside [0, rate/2]");
    }
    const double w = 2.0 * std::numbers::pi * fr / rate;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    double db = 0.0;
    for (const auto& s : f.sections()) {
      const auto num = s.b[0] + s.b[1] * z1 + s.b[2] * z2;
      const auto den = s.a[0] + s.a[1] * z1 + s.a[2] * z2;
      db += 20.0 * std::log10(std::abs(num) / std::abs(den));
    }
    out.push_back(db);
  }
  return out;
}

namespace {

double prewarp(double f_hz, double rate) {
  return 2.0 * rate * std::tan(std::numbers::pi * f_hz / rate);
}

}  // namespace

IirFilter design_elliptic(FilterAction kind, double rate, const FilterDesignConfig& cfg) {
  if (rate != kSampleRate) {
    throw PreconditionError("design_elliptic: only 2000 Hz sampling is supported");
  }
  const Zpk proto = elliptic::prototype(cfg.order, cfg.ripple_db, cfg.atten_db);
  FilterDesignMeta meta{kind, {}, cfg.ripple_db, cfg.atten_db, cfg.order};
  std::vector<Biquad> sections;

  switch (kind) {
    case FilterAction::HPF: {
      meta.cutoffs_hz = {cfg.hpf_cutoff_hz};
      sections = zpk_to_sos(bilinear(lowpass_to_highpass(proto, prewarp(cfg.hpf_cutoff_hz, rate)), rate));
      break;
    }
    case FilterAction::LPF: {
      meta.cutoffs_hz = {cfg.lpf_cutoff_hz};
      sections = zpk_to_sos(bilinear(lowpass_to_lowpass(proto, prewarp(cfg.lpf_cutoff_hz, rate)), rate));
      break;
    }
    case FilterAction::NF: {
      const double k = elliptic::selectivity(cfg.order, cfg.ripple_db, cfg.atten_db);
      for (double fc : cfg.notch_centers_hz) {
        if (!(fc - cfg.notch_stop_halfwidth_hz > 0.0 && fc + cfg.notch_stop_halfwidth_hz < rate / 2.0)) {
          throw PreconditionError("design_elliptic: notch band outside (0, rate/2)");
        }
        meta.cutoffs_hz.push_back(fc);
        const double w0 = prewarp(fc, rate);
        // Geometrically symmetric stopband covering fc +- halfwidth.
        const double hi = std::max(prewarp(fc + cfg.notch_stop_halfwidth_hz, rate),
                                   w0 * w0 / prewarp(fc - cfg.notch_stop_halfwidth_hz, rate));
        const double stop_bw = hi - w0 * w0 / hi;
        Zpk bs = bilinear(lowpass_to_bandstop(proto, w0, stop_bw / k), rate);
        // Unity gain at DC for each notch so the cascade does not stack ripple troughs.
        std::complex<double> dc = bs.gain;
        for (const auto& z : bs.zeros) dc *= 1.0 - z;
        for (const auto& p : bs.poles) dc /= 1.0 - p;
        bs.gain /= std::abs(dc);
        auto part = zpk_to_sos(bs);
        sections.insert(sections.end(), part.begin(), part.end());
      }
      // The ripples of the notches add up; pull the cascade's passband peak
      // back to 0 dB.
      if (!sections.empty()) {
        std::vector<double> grid(10001);
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.1 * static_cast<double>(i);
        const IirFilter probe(sections, meta);
        const auto db = magnitude_response(probe, grid, rate);
        const double peak = *std::max_element(db.begin(), db.end());
        const double g = std::pow(10.0, -peak / 20.0);
        for (double& b : sections.front().b) b *= g;
      }
      break;
    }
  }
  return IirFilter(std::move(sections), std::move(meta));
}

FilterBank::FilterBank(const FilterDesignConfig& cfg, double rate) {
  for (auto a : kAllActions) filters_.push_back(design_elliptic(a, rate, cfg));
}

const FilterBank& default_filter_bank() {
  static const FilterBank bank{};
  return bank;
}

nlohmann::json to_json(const IirFilter& f) {
  nlohmann::json j;
  const auto& m = f.meta();
  j["kind"] = to_string(m.kind);
  j["cutoffs_hz"] = m.cutoffs_hz;
  j["ripple_db"] = m.ripple_db;
  j["atten_db"] = m.atten_db;
  j["order"] = m.order;
  auto& secs = j["sections"] = nlohmann::json::array();
  for (const auto& s : f.sections()) secs.push_back({{"b", s.b}, {"a", s.a}});
  return j;
}

IirFilter filter_from_json(const nlohmann::json& j) {
  FilterDesignMeta meta;
  meta.kind = action_from_string(j.at("kind").get<std::string>());
  meta.cutoffs_hz = j.at("cutoffs_hz").get<std::vector<double>>();
  meta.ripple_db = j.at("ripple_db").get<double>();
  meta.atten_db = j.at("atten_db").get<double>();
  meta.order = j.at("order").get<int>();
  std::vector<Biquad> secs;
  for (const auto& s : j.at("sections")) {
    secs.push_back(Biquad{s.at("b").get<std::array<double, 3>>(), s.at("a").get<std::array<double, 3>>()});
  }
  return IirFilter(std::move(secs), std::move(meta));
}

}  // namespace emgdecon
