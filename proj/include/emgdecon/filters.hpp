#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgdecon/signal.hpp"

namespace emgdecon {

// Fixed encoding: HPF = 1, NF = 2, LPF = 3.
enum class FilterAction : int { HPF = 1, NF = 2, LPF = 3 };

inline constexpr std::array<FilterAction, 3> kAllActions = {FilterAction::HPF, FilterAction::NF,
                                                            FilterAction::LPF};

std::string to_string(FilterAction a);
FilterAction action_from_string(std::string_view s);
inline int action_index(FilterAction a) { return static_cast<int>(a) - 1; }
inline FilterAction action_from_index(int i) { return static_cast<FilterAction>(i + 1); }

// b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

struct FilterDesignMeta {
  FilterAction kind = FilterAction::HPF;
  std::vector<double> cutoffs_hz;
  double ripple_db = 0.0;
  double atten_db = 0.0;
  int order = 0;
};

// Cascade of second-order sections; every section is normalized (a0 == 1)
// and stable, otherwise construction throws.
class IirFilter {
public:
  IirFilter(std::vector<Biquad> sections, FilterDesignMeta meta);

  [[nodiscard]] std::span<const Biquad> sections() const { return sections_; }
  [[nodiscard]] const FilterDesignMeta& meta() const { return meta_; }

  // Largest pole radius over all sections.
  [[nodiscard]] double max_pole_radius() const;

private:
  std::vector<Biquad> sections_;
  FilterDesignMeta meta_;
};

// Direct-form-II-transposed delay line, one pair per section.
using FilterState = std::vector<std::array<double, 2>>;

FilterState zero_state(const IirFilter& f);

// Filters `x` in place-order, updating `state`.
std::vector<double> filter_samples(const IirFilter& f, std::span<const double> x,
                                   FilterState& state);

struct FilteredSegment {
  Segment segment;
  FilterState state;
};

FilteredSegment apply_filter(const IirFilter& f, const Segment& seg,
                             const std::optional<FilterState>& carry = std::nullopt);

// Per-section 20 log10 |H(e^jw)| summed; freqs must lie in [0, rate/2].
std::vector<double> magnitude_response(const IirFilter& f, std::span<const double> freqs_hz,
                                       double rate);

struct FilterDesignConfig {
  int order = 4;
  double ripple_db = 1.0;
  double atten_db = 80.0;
  double hpf_cutoff_hz = 20.0;
  double lpf_cutoff_hz = 465.0;
  std::vector<double> notch_centers_hz{50.0, 150.0};
  // Half-width of the band held at full attenuation around each centre.
  double notch_stop_halfwidth_hz = 2.0;
};

// Elliptic prototype, bilinear transform with pre-warping. Only 2 kHz is
// supported.
IirFilter design_elliptic(FilterAction kind, double rate, const FilterDesignConfig& cfg = {});

// The agent's three filters, designed once.
class FilterBank {
public:
  explicit FilterBank(const FilterDesignConfig& cfg = {}, double rate = kSampleRate);
  [[nodiscard]] const IirFilter& get(FilterAction a) const {
    return filters_[static_cast<std::size_t>(action_index(a))];
  }

private:
  std::vector<IirFilter> filters_;
};

const FilterBank& default_filter_bank();

nlohmann::json to_json(const IirFilter& f);
IirFilter filter_from_json(const nlohmann::json& j);

// Analog/digital zero-pole-gain form used by the designer.
struct Zpk {
  std::vector<std::complex<double>> zeros;
  std::vector<std::complex<double>> poles;
  double gain = 1.0;
};

namespace elliptic {

// Normalized lowpass prototype with passband edge 1 rad/s.
Zpk prototype(int order, double ripple_db, double atten_db);
// Modulus k of the prototype; the stopband starts at 1/k rad/s.
double selectivity(int order, double ripple_db, double atten_db);

double complete_integral(double k);
std::complex<double> cde(std::complex<double> u, double k);
std::complex<double> sne(std::complex<double> u, double k);
std::complex<double> acde(std::complex<double> w, double k);
std::complex<double> asne(std::complex<double> w, double k);

}  // namespace elliptic

Zpk lowpass_to_lowpass(const Zpk& p, double wc);
Zpk lowpass_to_highpass(const Zpk& p, double wc);
Zpk lowpass_to_bandstop(const Zpk& p, double w0, double bw);
Zpk bilinear(const Zpk& analog, double rate);
std::vector<Biquad> zpk_to_sos(const Zpk& digital);

}  // namespace emgdecon
