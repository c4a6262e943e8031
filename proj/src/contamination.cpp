#include "emgdecon/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <optional>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "emgdecon/error.hpp"
#include "emgdecon/parallel.hpp"
#include "emgdecon/random.hpp"
#include "emgdecon/signal_io.hpp"

namespace emgdecon {

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::MOA: return "MOA";
    case NoiseKind::PLI: return "PLI";
    case NoiseKind::WGN: return "WGN";
  }
  throw PreconditionError("bad noise kind");
}

NoiseKind noise_kind_from_code(int code) {
  if (code < 1 || code > 3) throw PreconditionError("noise kind code must be 1, 2 or 3");
  return static_cast<NoiseKind>(code);
}

std::string to_string(AlphaMode m) { return m == AlphaMode::Standard ? "standard" : "literal"; }

AlphaMode alpha_mode_from_string(std::string_view s) {
  if (s == "standard") return AlphaMode::Standard;
  if (s == "literal") return AlphaMode::Literal;
  throw PreconditionError("unknown alpha mode: " + std::string(s));
}

NoiseSequence random_noise_sequence(std::uint64_t seed, std::size_t length) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(1, 3);
  NoiseSequence seq;
  seq.seed = seed;
  seq.kinds.reserve(length);
  for (std::size_t i = 0; i < length; ++i) seq.kinds.push_back(static_cast<NoiseKind>(pick(rng)));
  return seq;
}

namespace {

std::size_t sample_count(double duration_s, const char* who) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw PreconditionError(std::string(who) + ": duration must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  if (n == 0) throw PreconditionError(std::string(who) + ": duration shorter than one sample");
  return n;
}

// Raised-cosine low-pass in the frequency domain: 1 below fpass, 0 above fstop.
std::vector<double> lowpass_shape(const std::vector<double>& x, double fpass, double fstop) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double f = static_cast<double>(std::min(k, n - k)) * kSampleRate / static_cast<double>(n);
    const double g = std::clamp((fstop - f) / (fstop - fpass), 0.0, 1.0);
    spec[k] *= 0.5 - 0.5 * std::cos(std::numbers::pi * g);
  }
  std::vector<std::complex<double>> back;
  fft.inv(back, spec);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = back[i].real();
  return y;
}

}  // namespace

SampledSignal gen_moa(double duration_s, std::uint64_t seed, std::vector<double>* tap_times) {
  const std::size_t n = sample_count(duration_s, "gen_moa");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> base(n);
  for (auto& v : base) v = normal(rng);
  base = lowpass_shape(base, 5.0, 15.0);
  const double sd = std::sqrt(mean_square(base));
  if (sd > 0.0) {
    for (auto& v : base) v /= sd;
  }

  // 50-60 taps per minute, scaled to the duration.
  const int per_minute = std::uniform_int_distribution<int>(50, 60)(rng);
  const auto taps = static_cast<std::size_t>(std::llround(per_minute * duration_s / 60.0));
  std::vector<double> onsets;
  for (std::size_t j = 0; j < taps; ++j) {
    const double t0 = duration_s * u01(rng);
    const double amp = (3.0 + 3.0 * u01(rng)) * (u01(rng) < 0.5 ? -1.0 : 1.0);
    const double f0 = 2.0 + 8.0 * u01(rng);
    const double tau = 0.05 + 0.15 * u01(rng);
    onsets.push_back(t0);
    const auto first = static_cast<std::size_t>(std::ceil(t0 * kSampleRate));
    // 12 time constants is far below double resolution of the envelope.
    const auto last = std::min(n, first + static_cast<std::size_t>(12.0 * tau * kSampleRate));
    for (std::size_t i = first; i < last; ++i) {
      const double d = static_cast<double>(i) / kSampleRate - t0;
      base[i] += amp * std::sin(2.0 * std::numbers::pi * f0 * d) * std::exp(-d / tau);
    }
  }
  std::sort(onsets.begin(), onsets.end());
  if (tap_times != nullptr) *tap_times = std::move(onsets);
  return SampledSignal(lowpass_shape(base, 20.0, 30.0), kSampleRate);
}

SampledSignal gen_pli(double duration_s) {
  const std::size_t n = sample_count(duration_s, "gen_pli");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    y[i] = std::sin(2.0 * std::numbers::pi * 50.0 * t) +
           std::sin(2.0 * std::numbers::pi * 150.0 * t) / 3.0;
  }
  return SampledSignal(std::move(y), kSampleRate);
}

SampledSignal gen_wgn(double duration_s, std::uint64_t seed, double* power_db) {
  const std::size_t n = sample_count(duration_s, "gen_wgn");
  Rng rng(seed);
  const double p_db = std::uniform_real_distribution<double>(-8.0, -4.0)(rng);
  const double sd = std::pow(10.0, p_db / 20.0);
  std::normal_distribution<double> normal(0.0, sd);
  std::vector<double> y(n);
  for (auto& v : y) v = normal(rng);
  if (power_db != nullptr) *power_db = p_db;
  return SampledSignal(std::move(y), kSampleRate);
}

double alpha(double p_clean, double p_noise, double p_req_db) {
  if (!(p_clean > 0.0) || !(p_noise > 0.0)) {
    throw PreconditionError("alpha: powers must be positive");
  }
  if (!std::isfinite(p_req_db)) throw PreconditionError("alpha: level must be finite");
  const double den = p_noise * (std::pow(10.0, 0.1 * p_req_db) - 1.0);
  if (p_req_db == 0.0 || den == 0.0) throw NumericError("alpha: singular at 0 dB");
  return p_clean / den;
}

double standard_alpha(double p_clean, double p_noise, double snr_db) {
  if (!(p_clean > 0.0) || !(p_noise > 0.0)) {
    throw PreconditionError("standard_alpha: powers must be positive");
  }
  if (!std::isfinite(snr_db)) throw PreconditionError("standard_alpha: level must be finite");
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

const SampledSignal& NoiseBank::get(NoiseKind k) const {
  switch (k) {
    case NoiseKind::MOA: return moa;
    case NoiseKind::PLI: return pli;
    case NoiseKind::WGN: return wgn;
  }
  throw PreconditionError("bad noise kind");
}

NoiseBank make_noise_bank(double duration_s, std::uint64_t sequence_seed) {
  return NoiseBank{gen_moa(duration_s, derive_seed(sequence_seed, 1)), gen_pli(duration_s),
                   gen_wgn(duration_s, derive_seed(sequence_seed, 3))};
}

NoisyDataset contaminate(const SampledSignal& clean, const NoiseSequence& seq,
                         const ContaminationConfig& cfg, const NoiseBank& noise) {
  if (!std::isfinite(cfg.target_snr_db)) throw PreconditionError("contaminate: bad target SNR");
  if (clean.rate() != kSampleRate) throw PreconditionError("contaminate: clean must be 2 kHz");
  const std::size_t segs = clean.size() / kSegmentLength;
  if (segs != seq.kinds.size()) {
    throw PreconditionError("contaminate: sequence length " + std::to_string(seq.kinds.size()) +
                            " does not match " + std::to_string(segs) + " segments");
  }
  for (NoiseKind k : kAllNoiseKinds) {
    if (noise.get(k).size() < segs * kSegmentLength) {
      throw PreconditionError("contaminate: noise realization too short");
    }
  }
  const auto x = clean.samples();
  std::vector<double> y(x.begin(), x.end());
  std::vector<double> alphas(segs);
  for (std::size_t i = 0; i < segs; ++i) {
    const std::size_t off = i * kSegmentLength;
    const auto n = noise.get(seq.kinds[i]).samples().subspan(off, kSegmentLength);
    const double pc = mean_square(x.subspan(off, kSegmentLength));
    const double pn = mean_square(n);
    const double a = cfg.alpha_mode == AlphaMode::Standard
                         ? standard_alpha(pc, pn, cfg.target_snr_db)
                         : alpha(pc, pn, cfg.target_snr_db);
    alphas[i] = a;
    for (std::size_t j = 0; j < kSegmentLength; ++j) y[off + j] += a * n[j];
  }
  NoisyDataset ds{1, false, clean, SampledSignal(std::move(y), kSampleRate), seq, cfg, 0,
                  std::move(alphas)};
  return ds;
}

NoisyDataset contaminate(const SampledSignal& clean, const NoiseSequence& seq,
                         const ContaminationConfig& cfg) {
  return contaminate(clean, seq, cfg, make_noise_bank(clean.duration(), seq.seed));
}

double measured_snr(std::span<const double> clean, std::span<const double> noisy) {
  if (clean.size() != noisy.size()) throw PreconditionError("measured_snr: length mismatch");
  double pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) pn += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  pn /= static_cast<double>(clean.size());
  return 10.0 * std::log10(mean_square(clean) / pn);
}

double measured_snr(const Segment& clean, const Segment& noisy) {
  return measured_snr(clean.samples(), noisy.samples());
}

CorpusSeeds corpus_seeds(std::uint64_t base_seed) {
  CorpusSeeds s;
  for (std::size_t j = 0; j < 3; ++j) {
    s.clean[j] = derive_seed(base_seed, 100 + j);
    s.sequence[j] = derive_seed(base_seed, 200 + j);
  }
  return s;
}

std::vector<NoisyDataset> build_corpus(const ContaminationConfig& cfg, std::size_t n_signals,
                                       std::size_t n_sequences, unsigned jobs) {
  if (n_signals == 0 || n_sequences == 0 || n_signals > 3 || n_sequences > 3) {
    throw PreconditionError("build_corpus: between 1 and 3 signals and sequences");
  }
  const auto seeds = corpus_seeds(cfg.seed);
  const double duration = static_cast<double>(kSequenceLength * kSegmentLength) / kSampleRate;

  std::vector<std::optional<NoisyDataset>> slots(n_signals * n_sequences);
  auto work = [&](std::size_t idx) {
    const std::size_t j = idx / n_sequences;
    const std::size_t k = idx % n_sequences;
    const auto clean = synth_clean_semg(duration, seeds.clean[j]);
    const auto seq = random_noise_sequence(seeds.sequence[k]);
    auto ds = contaminate(clean, seq, cfg);
    ds.id = static_cast<int>(idx) + 1;
    ds.train = ds.id == 1;
    ds.clean_seed = seeds.clean[j];
    slots[idx] = std::move(ds);
  };

  parallel_for(slots.size(), jobs, work);
  std::vector<NoisyDataset> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

nlohmann::json dataset_manifest_entry(const NoisyDataset& ds, const std::string& clean_path,
                                      const std::string& noisy_path) {
  std::vector<int> codes;
  for (NoiseKind k : ds.sequence.kinds) codes.push_back(static_cast<int>(k));
  return {{"id", ds.name()},
          {"train", ds.train},
          {"clean", clean_path},
          {"noisy", noisy_path},
          {"sequence", codes},
          {"sequence_seed", ds.sequence.seed},
          {"clean_seed", ds.clean_seed},
          {"target_snr_db", ds.config.target_snr_db},
          {"alpha_mode", to_string(ds.config.alpha_mode)},
          {"seed", ds.config.seed},
          {"alphas", ds.alphas}};
}

void write_corpus(const std::filesystem::path& dir, const std::vector<NoisyDataset>& corpus) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["datasets"] = nlohmann::json::array();
  for (const auto& ds : corpus) {
    const std::string clean = ds.name() + "_clean.semg";
    const std::string noisy = ds.name() + "_noisy.semg";
    write_semg1(dir / clean, ds.clean);
    write_semg1(dir / noisy, ds.noisy);
    manifest["datasets"].push_back(dataset_manifest_entry(ds, clean, noisy));
  }
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw IoError("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
}

namespace {

NoisyDataset dataset_from_entry(const std::filesystem::path& dir, const nlohmann::json& e) {
  NoiseSequence seq;
  seq.seed = e.at("sequence_seed").get<std::uint64_t>();
  for (int c : e.at("sequence").get<std::vector<int>>()) seq.kinds.push_back(noise_kind_from_code(c));
  ContaminationConfig cfg{e.at("target_snr_db").get<double>(),
                          alpha_mode_from_string(e.at("alpha_mode").get<std::string>()),
                          e.at("seed").get<std::uint64_t>()};
  const auto id_str = e.at("id").get<std::string>();
  NoisyDataset ds{std::stoi(id_str.substr(2)),
                  e.at("train").get<bool>(),
                  read_semg1(dir / e.at("clean").get<std::string>()),
                  read_semg1(dir / e.at("noisy").get<std::string>()),
                  std::move(seq),
                  cfg,
                  e.at("clean_seed").get<std::uint64_t>(),
                  e.at("alphas").get<std::vector<double>>()};
  if (ds.clean.size() != ds.noisy.size()) throw IoError(id_str + ": clean/noisy length mismatch");
  return ds;
}

nlohmann::json load_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("no dataset manifest in " + dir.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad manifest: ") + e.what());
  }
}

}  // namespace

std::vector<NoisyDataset> read_corpus(const std::filesystem::path& dir) {
  const auto manifest = load_manifest(dir);
  std::vector<NoisyDataset> out;
  try {
    for (const auto& e : manifest.at("datasets")) out.push_back(dataset_from_entry(dir, e));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad manifest: ") + e.what());
  }
  return out;
}

NoisyDataset read_dataset(const std::filesystem::path& dir, int id) {
  const auto manifest = load_manifest(dir);
  try {
    for (const auto& e : manifest.at("datasets")) {
      if (e.at("id").get<std::string>() == "ND" + std::to_string(id)) {
        return dataset_from_entry(dir, e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad manifest: ") + e.what());
  }
  throw PreconditionError("dataset ND" + std::to_string(id) + " not found in " + dir.string());
}

}  // namespace emgdecon
