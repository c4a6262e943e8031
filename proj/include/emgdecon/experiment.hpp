#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgdecon/contamination.hpp"
#include "emgdecon/dqn/agent.hpp"
#include "emgdecon/eval.hpp"
#include "emgdecon/features.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/reward/registry.hpp"

namespace emgdecon {

struct ExperimentPaths {
  std::string data_dir = "data";
  std::string model_dir = "models";
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<double> levels{-5.0, -1.0, 1.0, 5.0};
  AlphaMode alpha_mode = AlphaMode::Standard;
  double reference_duration_s = 120.0;
  unsigned jobs = 1;
  ExperimentPaths paths;
  FilterDesignConfig filters;
  FeatureConfig features;
  ClassifierParams classifier;
  SelectionConfig selection;
  TrainConfig train;
};

// Every tunable is written as {"value": v, "source": "published" | "reconstruction"};
// the reader also accepts bare values.
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& c);

// Resolves every artifact location under one root directory.
class Workspace {
public:
  Workspace(std::filesystem::path root, ExperimentConfig cfg);

  [[nodiscard]] const ExperimentConfig& config() const { return cfg_; }
  [[nodiscard]] const std::filesystem::path& root() const { return root_; }
  [[nodiscard]] std::filesystem::path data_dir(double level_db) const;
  [[nodiscard]] std::filesystem::path registry_dir() const;
  [[nodiscard]] std::filesystem::path checkpoint_path(double level_db) const;
  [[nodiscard]] std::filesystem::path report_dir() const;

  [[nodiscard]] const FilterBank& bank() const { return bank_; }
  // Built lazily from a long clean recording; identical across commands.
  [[nodiscard]] const SpectralReference& reference() const;

private:
  std::filesystem::path root_;
  ExperimentConfig cfg_;
  FilterBank bank_;
  mutable std::optional<SpectralReference> ref_;
};

void cmd_init(const std::filesystem::path& config_path, bool force, std::ostream& out);
void cmd_gen(const Workspace& ws, const std::vector<double>& levels, std::ostream& out);
void cmd_reward_train(const Workspace& ws, double level_db, std::ostream& out);
void cmd_explain(const Workspace& ws, SelectCode code, std::ostream& out);
void cmd_agent_train(const Workspace& ws, double level_db, std::ostream& out);
void cmd_simulate(const Workspace& ws, double level_db, int dataset_id, std::ostream& out);
EvalReport cmd_compare(const Workspace& ws, std::ostream& out);

inline constexpr const char* kAgentMethod = "supDQN";

}  // namespace emgdecon
