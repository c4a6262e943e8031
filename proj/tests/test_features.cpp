#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emgdecon/contamination.hpp"
#include "emgdecon/error.hpp"
#include "emgdecon/features.hpp"

using namespace emgdecon;

namespace {

const SpectralReference& reference() {
  static const SpectralReference ref = make_spectral_reference(synth_clean_semg(120.0, 99));
  return ref;
}

std::vector<Segment> contaminated_segments(NoiseKind kind, double level, std::uint64_t seed) {
  const auto clean = synth_clean_semg(32.0, seed);
  NoiseSequence seq{std::vector<NoiseKind>(64, kind), seed + 1};
  const auto ds = contaminate(clean, seq, ContaminationConfig{level, AlphaMode::Standard, 0});
  return segment_signal(ds.noisy);
}

}  // namespace

TEST_CASE("feature vector order") {
  FeatureVector fv{1.1, 2.0, 3.0, 4.0, 5.0, 6.0};
  const auto a = fv.to_array();
  CHECK(a[0] == 1.1);
  CHECK(a[5] == 6.0);
  CHECK(FeatureVector::from_array(a) == fv);
  CHECK(kFeatureNames[0] == "DEF");
  CHECK(kFeatureNames[4] == "SPR");
}

TEST_CASE("reference mean frequency lies in the EMG band") {
  CHECK(reference().mean_freq >= 20.0);
  CHECK(reference().mean_freq <= 450.0);
}

TEST_CASE("DEF of a signal against its own reference is one") {
  const auto sig = synth_clean_semg(4.0, 5);
  const auto ref = make_spectral_reference(sig);
  CHECK(features_from_psd(ref.psd, ref).def == doctest::Approx(1.0));
}

TEST_CASE("clean segments keep DEF near one") {
  const auto segs = segment_signal(synth_clean_semg(32.0, 17));
  for (const auto& s : segs) {
    const auto fv = extract_features(s, reference());
    CHECK(fv.def >= 1.0);
    CHECK(fv.def <= 1.2);
    for (double v : fv.to_array()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("pure 50 Hz sine has very low SPR") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * std::numbers::pi * 50.0 * static_cast<double>(i) / kSampleRate);
  }
  CHECK(extract_features(Segment(x, 0), reference()).spr <= -20.0);
}

TEST_CASE("features are scale invariant") {
  const auto segs = segment_signal(synth_clean_semg(8.0, 3));
  for (const auto& s : segs) {
    std::vector<double> y(s.samples().begin(), s.samples().end());
    for (auto& v : y) v *= 37.5;
    const auto a = extract_features(s, reference()).to_array();
    const auto b = extract_features(Segment(y, s.index()), reference()).to_array();
    for (std::size_t k = 0; k < kFeatureCount; ++k) CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-9));
  }
}

TEST_CASE("log ratios are clamped") {
  // A pure 200 Hz tone has next to nothing in the motion or noise bands.
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * std::numbers::pi * 200.0 * static_cast<double>(i) / kSampleRate);
  }
  const auto fv = extract_features(Segment(x, 0), reference());
  for (double v : {fv.dpr, fv.smr, fv.snr, fv.spr, fv.ser}) {
    CHECK(v <= 80.0);
    CHECK(v >= -80.0);
  }
}

TEST_CASE("all-zero segment is rejected") {
  CHECK_THROWS_AS(extract_features(Segment(std::vector<double>(1000, 0.0), 0), reference()),
                  NumericError);
}

TEST_CASE("matching filter raises the matching ratio") {
  struct Case {
    NoiseKind kind;
    FilterAction action;
    double FeatureVector::*ratio;
  };
  const Case cases[] = {{NoiseKind::MOA, FilterAction::HPF, &FeatureVector::smr},
                        {NoiseKind::PLI, FilterAction::NF, &FeatureVector::spr},
                        {NoiseKind::WGN, FilterAction::LPF, &FeatureVector::snr}};
  for (const auto& c : cases) {
    CAPTURE(to_string(c.kind));
    std::size_t improved = 0;
    const auto segs = contaminated_segments(c.kind, -1.0, 41);
    for (const auto& s : segs) {
      const auto before = extract_features(s, reference());
      const auto after = affected_features(s, c.action, reference());
      improved += (after.*c.ratio) > (before.*c.ratio);
    }
    CHECK(static_cast<double>(improved) >= 0.95 * static_cast<double>(segs.size()));
  }
}

TEST_CASE("filtering a clean segment barely moves DEF") {
  const auto segs = segment_signal(synth_clean_semg(32.0, 23));
  for (const auto& s : segs) {
    const double d0 = extract_features(s, reference()).def;
    for (auto a : kAllActions) {
      CHECK(std::abs(affected_features(s, a, reference()).def - d0) <= 0.15);
    }
  }
}
