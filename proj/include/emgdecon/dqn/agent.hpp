#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "emgdecon/contamination.hpp"
#include "emgdecon/dqn/qnetwork.hpp"
#include "emgdecon/dqn/replay_buffer.hpp"
#include "emgdecon/reward/registry.hpp"

namespace emgdecon {

struct TrainConfig {
  std::size_t episodes = 2000;
  std::size_t max_steps = 64;
  double lr = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double grad_clip = 1.0;
  double gamma = 0.9;
  double eps_start = 0.6;
  double eps_end = 0.05;
  double eps_decay = 0.003;
  std::size_t batch = 32;
  std::size_t target_sync = 64;
  std::size_t replay_capacity = 10000;
  std::vector<std::size_t> hidden{32, 32};
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// max(eps_end, eps_start - eps_decay * step)
double epsilon_at(std::uint64_t step, const TrainConfig& cfg);

// Ties go to the lowest action index.
FilterAction greedy_action(const QValues& q);
FilterAction epsilon_greedy(const QValues& q, double eps, Rng& rng);

struct TdResult {
  double loss = 0.0;
  std::vector<double> grad;
  double grad_norm = 0.0;  // before clipping
};

// Mean squared TD error against the frozen target network; terminal
// transitions do not bootstrap. grad_clip <= 0 leaves the gradient as is.
TdResult td_loss_and_grads(const QNetwork& net, const QNetwork& target,
                           std::span<const Transition> batch, double gamma, double grad_clip);

// Everything the fixed environment yields: pre-filter states and the reward
// of every (segment, action) pair.
struct EnvTable {
  std::vector<FeatureVector> states;
  std::vector<QValues> rewards;
};

EnvTable build_env_table(const NoisyDataset& env, double level_db, const ModelRegistry& registry,
                         const SpectralReference& ref,
                         const FilterBank& bank = default_filter_bank());

struct AgentCheckpoint {
  TrainConfig config;
  double level_db = 0.0;
  QNetwork net;
  QNetwork target;
  AdamState adam;
  std::uint64_t steps = 0;
  std::uint64_t episodes = 0;
  std::vector<std::string> registry_codes;
};

struct EpisodeLog {
  std::size_t episode = 0;
  double ret = 0.0;
  double mean_loss = 0.0;
  double eps = 0.0;
};

AgentCheckpoint train_agent(const EnvTable& env, double level_db, const TrainConfig& cfg,
                            std::vector<EpisodeLog>* log = nullptr);
AgentCheckpoint train_agent(const NoisyDataset& env, double level_db,
                            const ModelRegistry& registry, const SpectralReference& ref,
                            const TrainConfig& cfg, std::vector<EpisodeLog>* log = nullptr);

void write_training_log(const std::filesystem::path& path, std::span<const EpisodeLog> log);

struct ActResult {
  std::vector<FilterAction> actions;
  SampledSignal filtered;
};

// Greedy policy; each segment filtered from zero state by its chosen filter.
ActResult act(const AgentCheckpoint& ckpt, const SampledSignal& noisy,
              const SpectralReference& ref, const FilterBank& bank = default_filter_bank());

// One-line JSON header, newline, then the little-endian f64 blob.
void save_checkpoint(const std::filesystem::path& path, const AgentCheckpoint& ckpt);
AgentCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace emgdecon
