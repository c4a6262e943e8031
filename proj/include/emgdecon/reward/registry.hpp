#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emgdecon/contamination.hpp"
#include "emgdecon/features.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/reward/classifiers.hpp"
#include "emgdecon/reward/lime.hpp"

namespace emgdecon {

inline constexpr std::array<double, 4> kNoiseLevels = {-5.0, -1.0, 1.0, 5.0};

// S1S2 picks the level (00:-5, 01:-1, 10:+1, 11:+5 dB), S3S4 the action
// (01:HPF, 10:NF, 11:LPF). Twelve valid codes.
class SelectCode {
public:
  static SelectCode make(double level_db, FilterAction action);
  static SelectCode parse(std::string_view bits);
  static SelectCode from_bits(unsigned bits);

  [[nodiscard]] unsigned bits() const { return bits_; }
  [[nodiscard]] double level_db() const { return kNoiseLevels[bits_ >> 2]; }
  [[nodiscard]] FilterAction action() const { return static_cast<FilterAction>(bits_ & 3u); }
  [[nodiscard]] std::string str() const;

  auto operator<=>(const SelectCode&) const = default;

private:
  explicit SelectCode(unsigned bits) : bits_(bits) {}
  unsigned bits_;
};

unsigned level_bits(double level_db);

// Clean iff the action is the one matched to the noise kind.
bool label_clean(NoiseKind kind, FilterAction action);
FilterAction desired_action(NoiseKind kind);

struct LabeledExample {
  FeatureVector features;  // affected (post-filter) state
  bool clean = false;
  NoiseKind kind = NoiseKind::MOA;
  FilterAction action = FilterAction::HPF;
  double level_db = 0.0;
  std::size_t segment = 0;
};

// Three examples per segment, one per action, in segment-major order.
std::vector<LabeledExample> build_reward_training_set(const NoisyDataset& nd, double level_db,
                                                      const SpectralReference& ref,
                                                      const FilterBank& bank = default_filter_bank(),
                                                      const FeatureConfig& fcfg = {});

Eigen::MatrixXd feature_matrix(std::span<const LabeledExample> ex);
Labels label_vector(std::span<const LabeledExample> ex);

// Per-class shuffle, `fraction` of each class (rounded) to validation.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
Split stratified_split(const Labels& y, double fraction, std::uint64_t seed);

struct SelectionConfig {
  double val_fraction = 0.2;
  std::size_t lime_instances = 25;
  std::vector<std::size_t> subset_sizes{3, 4, 5, 6};
  LimeConfig lime{};
  ClassifierParams params{};
};

struct RegistryEntry {
  SelectCode code = SelectCode::make(-5.0, FilterAction::HPF);
  ClassifierKind kind = ClassifierKind::SVM;
  std::vector<std::size_t> features;
  double accuracy = 0.0;               // held-out, of the kept model
  double all_features_accuracy = 0.0;  // held-out, best kind on all features
  std::map<ClassifierKind, double> candidate_accuracy;
  std::array<double, kFeatureCount> lime_mean_weight{};
  std::array<double, kFeatureCount> lime_mean_abs_weight{};
  std::size_t lime_instances = 0;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::shared_ptr<const TrainedModel> model;
};

// Candidates on all features, LIME over the validation rows, then a sweep
// over top-k subsets; the subset model is kept only if it strictly beats
// the all-features model.
RegistryEntry select_model(std::span<const LabeledExample> level_set, double level_db,
                           FilterAction action, std::uint64_t seed,
                           const SelectionConfig& cfg = {}, unsigned jobs = 1);
std::vector<RegistryEntry> select_models(std::span<const LabeledExample> level_set,
                                         double level_db, std::uint64_t seed,
                                         const SelectionConfig& cfg = {}, unsigned jobs = 1);

class ModelRegistry {
public:
  void insert(RegistryEntry e);
  [[nodiscard]] bool contains(SelectCode c) const { return entries_.contains(c.bits()); }
  [[nodiscard]] const RegistryEntry& at(SelectCode c) const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const std::map<unsigned, RegistryEntry>& entries() const { return entries_; }
  // True when all three actions of the level are present.
  [[nodiscard]] bool has_level(double level_db) const;

private:
  std::map<unsigned, RegistryEntry> entries_;
};

// +2 when the code's model calls the affected state clean, else 0.
double reward(const FeatureVector& affected, SelectCode code, const ModelRegistry& registry);

// <dir>/<code>.json plus <code>.bin per entry.
void save_registry_entry(const std::filesystem::path& dir, const RegistryEntry& e);
ModelRegistry load_registry(const std::filesystem::path& dir);

}  // namespace emgdecon
