#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgdecon/signal.hpp"

namespace emgdecon {

// Codes 1/2/3 in manifests.
enum class NoiseKind : int { MOA = 1, PLI = 2, WGN = 3 };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_code(int code);

inline constexpr std::array<NoiseKind, 3> kAllNoiseKinds = {NoiseKind::MOA, NoiseKind::PLI,
                                                           NoiseKind::WGN};

inline constexpr std::size_t kSequenceLength = 64;

struct NoiseSequence {
  std::vector<NoiseKind> kinds;
  std::uint64_t seed = 0;
};

// 64 kinds drawn independently and uniformly.
NoiseSequence random_noise_sequence(std::uint64_t seed, std::size_t length = kSequenceLength);

enum class AlphaMode { Literal, Standard };

std::string to_string(AlphaMode m);
AlphaMode alpha_mode_from_string(std::string_view s);

struct ContaminationConfig {
  double target_snr_db = -5.0;
  AlphaMode alpha_mode = AlphaMode::Standard;
  std::uint64_t seed = 0;
};

struct NoisyDataset {
  int id = 1;  // ND1..ND9
  bool train = false;
  SampledSignal clean;
  SampledSignal noisy;
  NoiseSequence sequence;
  ContaminationConfig config;
  std::uint64_t clean_seed = 0;
  std::vector<double> alphas;  // applied amplitude multiplier per segment

  [[nodiscard]] std::string name() const { return "ND" + std::to_string(id); }
};

// Motion artifact surrogate. `tap_times` (if given) receives the onset of
// each damped transient in seconds.
SampledSignal gen_moa(double duration_s, std::uint64_t seed,
                      std::vector<double>* tap_times = nullptr);
SampledSignal gen_pli(double duration_s);
// `power_db` (if given) receives the drawn target power.
SampledSignal gen_wgn(double duration_s, std::uint64_t seed, double* power_db = nullptr);

// Level factor exactly as printed: Pc / (Pn * (10^(Preq/10) - 1)).
double alpha(double p_clean, double p_noise, double p_req_db);
// Amplitude scale that makes the segment SNR equal the target.
double standard_alpha(double p_clean, double p_noise, double snr_db);

// Full-length noise realizations for one sequence; index with NoiseKind.
struct NoiseBank {
  SampledSignal moa;
  SampledSignal pli;
  SampledSignal wgn;
  [[nodiscard]] const SampledSignal& get(NoiseKind k) const;
};

NoiseBank make_noise_bank(double duration_s, std::uint64_t sequence_seed);

NoisyDataset contaminate(const SampledSignal& clean, const NoiseSequence& seq,
                         const ContaminationConfig& cfg, const NoiseBank& noise);
NoisyDataset contaminate(const SampledSignal& clean, const NoiseSequence& seq,
                         const ContaminationConfig& cfg);

// +infinity when the noise power is zero.
double measured_snr(const Segment& clean, const Segment& noisy);
double measured_snr(std::span<const double> clean, std::span<const double> noisy);

struct CorpusSeeds {
  std::array<std::uint64_t, 3> clean{};
  std::array<std::uint64_t, 3> sequence{};
};

CorpusSeeds corpus_seeds(std::uint64_t base_seed);

// Signal j in 1..3, sequence k in 1..3 gives ND(3(j-1)+k). ND1 trains.
std::vector<NoisyDataset> build_corpus(const ContaminationConfig& cfg, std::size_t n_signals = 3,
                                       std::size_t n_sequences = 3, unsigned jobs = 1);

nlohmann::json dataset_manifest_entry(const NoisyDataset& ds, const std::string& clean_path,
                                      const std::string& noisy_path);
void write_corpus(const std::filesystem::path& dir, const std::vector<NoisyDataset>& corpus);
// Reads what write_corpus produced. Samples come back at f32 precision.
std::vector<NoisyDataset> read_corpus(const std::filesystem::path& dir);
NoisyDataset read_dataset(const std::filesystem::path& dir, int id);

}  // namespace emgdecon
