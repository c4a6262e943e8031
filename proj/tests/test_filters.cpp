#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "emgdecon/baselines.hpp"
#include "emgdecon/contamination.hpp"
#include "emgdecon/error.hpp"
#include "emgdecon/eval.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/wavelet.hpp"

using namespace emgdecon;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<double> x(n);
  for (auto& v : x) v = n01(rng);
  return x;
}

using Poly = std::vector<long double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0L);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// Impulse response of the expanded transfer function, evaluated by direct
// recursion in extended precision. Sections are expanded four at a time and
// the partial responses convolved, since one 16th-order notch polynomial is
// too badly conditioned to serve as an oracle.
Poly expanded_impulse(std::span<const Biquad> secs, std::size_t n) {
  Poly b{1.0L}, a{1.0L};
  for (const auto& s : secs) {
    b = poly_mul(b, {s.b[0], s.b[1], s.b[2]});
    a = poly_mul(a, {s.a[0], s.a[1], s.a[2]});
  }
  Poly y(n, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    long double acc = i < b.size() ? b[i] : 0.0L;
    for (std::size_t k = 1; k < a.size() && k <= i; ++k) acc -= a[k] * y[i - k];
    y[i] = acc;
  }
  return y;
}

std::vector<double> direct_impulse(const IirFilter& f, std::size_t n) {
  const auto secs = f.sections();
  Poly h(n, 0.0L);
  h[0] = 1.0L;
  for (std::size_t first = 0; first < secs.size(); first += 4) {
    const auto part = expanded_impulse(secs.subspan(first, std::min<std::size_t>(4, secs.size() - first)), n);
    Poly next(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k <= i; ++k) next[i] += h[k] * part[i - k];
    }
    h = std::move(next);
  }
  return {h.begin(), h.end()};
}

SampledSignal pure_tone_mix(double seconds) {
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    x[i] = std::sin(2 * std::numbers::pi * 120.0 * t) + 0.4 * std::sin(2 * std::numbers::pi * 310.0 * t);
  }
  return SampledSignal(x, kSampleRate);
}

NoisyDataset single_kind_dataset(NoiseKind kind, double level) {
  const auto clean = synth_clean_semg(32.0, 77);
  NoiseSequence seq{std::vector<NoiseKind>(64, kind), 78};
  return contaminate(clean, seq, ContaminationConfig{level, AlphaMode::Standard, 0});
}

}  // namespace

TEST_CASE("elliptic prototype matches reference zeros, poles and gain") {
  const auto p = elliptic::prototype(4, 1.0, 80.0);
  REQUIRE(p.zeros.size() == 4);
  REQUIRE(p.poles.size() == 4);
  const double zero_im[] = {10.961428612672728, 4.586243234619878};
  for (double im : zero_im) {
    int hits = 0;
    for (auto z : p.zeros) hits += std::abs(z - std::complex<double>(0, im)) < 1e-6 ||
                                   std::abs(z - std::complex<double>(0, -im)) < 1e-6;
    CHECK(hits == 2);
  }
  const std::complex<double> poles[] = {{-0.339810208977304, 0.4141852199688755},
                                        {-0.13582244620333112, 0.9846339790073712}};
  for (auto pr : poles) {
    int hits = 0;
    for (auto q : p.poles) hits += std::abs(q - pr) < 1e-6 || std::abs(q - std::conj(pr)) < 1e-6;
    CHECK(hits == 2);
  }
  CHECK(p.gain == doctest::Approx(1e-4).epsilon(1e-6));
  CHECK(elliptic::prototype(5, 1.0, 80.0).gain ==
        doctest::Approx(0.001190965689706967).epsilon(1e-6));
}

TEST_CASE("HPF response matches the reference design") {
  const auto& f = default_filter_bank().get(FilterAction::HPF);
  const std::vector<double> hz{2, 10, 19, 25, 50, 100, 200, 450, 500, 800, 999};
  const double expect[] = {-95.90893466,  -35.74123287,  -3.070385854, -0.7579578495,
                           -0.00298043269, -0.5261443375, -0.8740356205, -0.9812755089,
                           -0.9863250479, -0.9985521543, -0.9999999662};
  const auto db = magnitude_response(f, hz, kSampleRate);
  for (std::size_t i = 0; i < hz.size(); ++i) {
    CAPTURE(hz[i]);
    CHECK(db[i] == doctest::Approx(expect[i]).epsilon(1e-6));
  }
  CHECK(f.max_pole_radius() == doctest::Approx(0.9914046759311123).epsilon(1e-9));
}

TEST_CASE("LPF response matches the reference design") {
  const auto& f = default_filter_bank().get(FilterAction::LPF);
  const std::vector<double> hz{0, 2, 10, 19, 25, 50, 100, 200, 450, 500, 800, 999};
  const double expect[] = {-1.0,         -0.9998291103, -0.9957311653, -0.9846230499,
                           -0.9734368754, -0.8954561757, -0.6113255055, -0.01233501765,
                           -0.1168101767, -6.328280003,  -62.12334531,  -80.00241038};
  const auto db = magnitude_response(f, hz, kSampleRate);
  for (std::size_t i = 0; i < hz.size(); ++i) {
    CAPTURE(hz[i]);
    CHECK(db[i] == doctest::Approx(expect[i]).epsilon(1e-6));
  }
  CHECK(f.max_pole_radius() == doctest::Approx(0.8723426584709805).epsilon(1e-9));
}

TEST_CASE("filter envelopes") {
  const auto& bank = default_filter_bank();
  auto at = [&](FilterAction a, double hz) {
    const std::vector<double> f{hz};
    return magnitude_response(bank.get(a), f, kSampleRate)[0];
  };
  CHECK(at(FilterAction::HPF, 2.0) <= -60.0);
  CHECK(at(FilterAction::NF, 50.0) <= -40.0);
  CHECK(at(FilterAction::NF, 150.0) <= -40.0);
  CHECK(at(FilterAction::LPF, 800.0) <= -60.0);
  CHECK(at(FilterAction::NF, 40.0) >= -3.0);
  CHECK(at(FilterAction::NF, 60.0) >= -3.0);
  for (double hz : {100.0}) {
    CHECK(at(FilterAction::HPF, hz) <= 0.5);
    CHECK(at(FilterAction::HPF, hz) >= -1.5);
  }
  for (double hz : {100.0, 200.0, 300.0, 400.0}) {
    CHECK(at(FilterAction::NF, hz) <= 0.5);
    CHECK(at(FilterAction::NF, hz) >= -1.5);
  }
  CHECK(at(FilterAction::LPF, 200.0) <= 0.5);
  CHECK(at(FilterAction::LPF, 200.0) >= -1.5);
  const double dc = at(FilterAction::LPF, 0.0);
  CHECK(dc <= 1e-12);
  CHECK(dc >= -1.0 - 1e-9);
  for (auto a : kAllActions) CHECK(bank.get(a).max_pole_radius() < 1.0);
}

TEST_CASE("magnitude_response identities") {
  const IirFilter ident({Biquad{}}, {});
  const std::vector<double> hz{0.0, 10.0, 500.0, 1000.0};
  for (double d : magnitude_response(ident, hz, kSampleRate)) CHECK(d == doctest::Approx(0.0));

  Biquad s{{0.3, 0.2, 0.1}, {1.0, -0.5, 0.2}};
  const IirFilter one({s}, {});
  const IirFilter two({s, s}, {});
  const auto d1 = magnitude_response(one, hz, kSampleRate);
  const auto d2 = magnitude_response(two, hz, kSampleRate);
  for (std::size_t i = 0; i < hz.size(); ++i) CHECK(d2[i] == doctest::Approx(2.0 * d1[i]));

  const std::vector<double> bad{1500.0};
  CHECK_THROWS_AS(magnitude_response(one, bad, kSampleRate), PreconditionError);
}

TEST_CASE("unstable or unnormalized sections are rejected") {
  CHECK_THROWS_AS(IirFilter({Biquad{{1, 0, 0}, {1, 0, 1.2}}}, {}), NumericError);
  CHECK_THROWS(IirFilter({Biquad{{1, 0, 0}, {2, 0, 0}}}, {}));
}

TEST_CASE("apply_filter properties") {
  const auto& bank = default_filter_bank();
  const Segment zero(std::vector<double>(1000, 0.0), 0);
  for (auto a : kAllActions) {
    const auto out = apply_filter(bank.get(a), zero);
    for (double v : out.segment.samples()) CHECK(v == 0.0);
  }

  SUBCASE("impulse response matches the expanded transfer function") {
    for (auto a : {FilterAction::HPF, FilterAction::LPF, FilterAction::NF}) {
      std::vector<double> imp(1000, 0.0);
      imp[0] = 1.0;
      const auto got = apply_filter(bank.get(a), Segment(imp, 0)).segment;
      const auto want = direct_impulse(bank.get(a), 1000);
      double worst = 0.0;
      for (std::size_t i = 0; i < 1000; ++i) worst = std::max(worst, std::abs(got.samples()[i] - want[i]));
      CAPTURE(to_string(a));
      CHECK(worst <= 1e-9);
    }
  }

  SUBCASE("linearity") {
    const auto x = random_signal(1000, 3);
    std::vector<double> ax(x);
    for (auto& v : ax) v *= -2.5;
    for (auto a : kAllActions) {
      const auto y = apply_filter(bank.get(a), Segment(x, 0)).segment;
      const auto y2 = apply_filter(bank.get(a), Segment(ax, 0)).segment;
      double worst = 0.0;
      for (std::size_t i = 0; i < 1000; ++i) {
        const double want = -2.5 * y.samples()[i];
        worst = std::max(worst, std::abs(y2.samples()[i] - want) / std::max(1.0, std::abs(want)));
      }
      CHECK(worst <= 1e-12);
    }
  }

  SUBCASE("streaming with carried state equals one batch pass") {
    const auto x = random_signal(5000, 4);
    for (auto a : kAllActions) {
      const auto& f = bank.get(a);
      auto st = zero_state(f);
      const auto batch = filter_samples(f, x, st);

      std::optional<FilterState> carry;
      std::vector<double> streamed;
      for (std::size_t k = 0; k < 5; ++k) {
        std::vector<double> chunk(x.begin() + static_cast<long>(k * 1000),
                                  x.begin() + static_cast<long>((k + 1) * 1000));
        auto out = apply_filter(f, Segment(chunk, k), carry);
        carry = out.state;
        streamed.insert(streamed.end(), out.segment.samples().begin(), out.segment.samples().end());
      }
      CHECK(streamed == batch);

      // Odd-sized pieces through filter_samples directly.
      auto st2 = zero_state(f);
      std::vector<double> pieces;
      std::size_t pos = 0;
      for (std::size_t len : {1u, 17u, 999u, 1234u, 2749u}) {
        auto part = filter_samples(f, std::span(x).subspan(pos, len), st2);
        pieces.insert(pieces.end(), part.begin(), part.end());
        pos += len;
      }
      CHECK(pieces == batch);
    }
  }
}

TEST_CASE("filter JSON round trip") {
  for (auto a : kAllActions) {
    const auto& f = default_filter_bank().get(a);
    const auto back = filter_from_json(to_json(f));
    REQUIRE(back.sections().size() == f.sections().size());
    for (std::size_t i = 0; i < f.sections().size(); ++i) {
      CHECK(back.sections()[i].b == f.sections()[i].b);
      CHECK(back.sections()[i].a == f.sections()[i].a);
    }
    CHECK(back.meta().kind == a);
  }
}

TEST_CASE("action encoding") {
  CHECK(static_cast<int>(FilterAction::HPF) == 1);
  CHECK(static_cast<int>(FilterAction::LPF) == 3);
  CHECK(action_from_string("NF") == FilterAction::NF);
  CHECK(to_string(FilterAction::LPF) == "LPF");
  CHECK_THROWS_AS(action_from_string("BPF"), PreconditionError);
}

TEST_CASE("wavelet filters") {
  for (auto fam : {WaveletFamily::Db4, WaveletFamily::Sym4}) {
    const auto& w = wavelet_filters(fam);
    REQUIRE(w.dec_lo.size() == 8);
    double sum = 0.0, energy = 0.0;
    for (double c : w.dec_lo) {
      sum += c;
      energy += c * c;
    }
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(energy == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("dwt matches a reference implementation") {
  std::vector<double> x(20);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::fmod(std::pow(static_cast<double>(i), 1.3), 7.0);
  const auto b = dwt(x, wavelet_filters(WaveletFamily::Db4));
  REQUIRE(b.approx.size() == 13);
  REQUIRE(b.detail.size() == 13);
  const double a0[] = {6.95316411, 3.41958926, 0.05817826, 1.10032918};
  for (int i = 0; i < 4; ++i) CHECK(b.approx[i] == doctest::Approx(a0[i]).epsilon(1e-7));
  CHECK(b.detail[0] == doctest::Approx(0.11975948).epsilon(1e-6));
  CHECK(b.detail[1] == doctest::Approx(0.07400388).epsilon(1e-6));

  const auto coeffs = wavedec(random_signal(1000, 8), WaveletFamily::Db4, 3);
  REQUIRE(coeffs.size() == 4);
  CHECK(coeffs[0].size() == 131);
  CHECK(coeffs[1].size() == 131);
  CHECK(coeffs[2].size() == 255);
  CHECK(coeffs[3].size() == 503);
}

TEST_CASE("wavelet perfect reconstruction") {
  for (auto fam : {WaveletFamily::Db4, WaveletFamily::Sym4}) {
    for (std::size_t n : {1000u, 999u, 64u}) {
      const auto x = random_signal(n, n);
      const auto y = waverec(wavedec(x, fam, 3), fam, n);
      REQUIRE(y.size() == n);
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
      CAPTURE(n);
      CHECK(worst <= 1e-8);
    }
  }
}

TEST_CASE("wavelet_denoise") {
  const Segment zero(std::vector<double>(1000, 0.0), 0);
  for (double v : wavelet_denoise(zero, {}).samples()) CHECK(v == 0.0);

  const auto x = random_signal(1000, 12);
  const auto y = wavelet_denoise(Segment(x, 3), WaveletDenoiser{WaveletFamily::Sym4, 3, 0.0});
  CHECK(y.index() == 3);
  for (std::size_t i = 0; i < 1000; ++i) CHECK(std::abs(y.samples()[i] - x[i]) <= 1e-8);

  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);

  // Denoising shrinks energy.
  const auto d = wavelet_denoise(x, WaveletDenoiser{});
  CHECK(mean_square(d) < mean_square(x));
}

TEST_CASE("static baselines") {
  SUBCASE("HPF on a motion-artifact dataset improves omega") {
    const auto ds = single_kind_dataset(NoiseKind::MOA, -1.0);
    const auto out = static_baseline(BaselineKind::HPF, ds);
    CHECK(out.size() == ds.noisy.size());
    const auto w = omega(out, ds.clean, ds.noisy);
    REQUIRE(w.has_value());
    CHECK(*w < 1.0);
  }
  SUBCASE("NF on a powerline dataset improves omega") {
    const auto ds = single_kind_dataset(NoiseKind::PLI, -1.0);
    const auto w = omega(static_baseline(BaselineKind::NF, ds), ds.clean, ds.noisy);
    REQUIRE(w.has_value());
    CHECK(*w < 1.0);
  }
  SUBCASE("zero noise makes omega inapplicable") {
    const auto clean = synth_clean_semg(32.0, 5);
    for (auto b : kAllBaselines) {
      CHECK_FALSE(omega(static_baseline(b, clean), clean, clean).has_value());
    }
  }
  SUBCASE("segments are processed independently") {
    const auto sig = pure_tone_mix(3.0);
    const auto whole = static_baseline(BaselineKind::LPF, sig);
    const SampledSignal second(std::vector<double>(sig.samples().begin() + 1000, sig.samples().begin() + 2000),
                               kSampleRate);
    const auto alone = static_baseline(BaselineKind::LPF, second);
    for (std::size_t i = 0; i < 1000; ++i) CHECK(whole[1000 + i] == alone[i]);
  }
  CHECK(baseline_from_string("WD_sym4") == BaselineKind::WD_sym4);
  CHECK_THROWS_AS(baseline_from_string("median"), PreconditionError);
}
