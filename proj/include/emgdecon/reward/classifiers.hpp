#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace emgdecon {

enum class ClassifierKind { SVM, LDA, NN, DecisionTree, LogisticRegression, KNN };

inline constexpr std::array<ClassifierKind, 6> kAllClassifiers = {
    ClassifierKind::SVM,          ClassifierKind::LDA,
    ClassifierKind::NN,           ClassifierKind::DecisionTree,
    ClassifierKind::LogisticRegression, ClassifierKind::KNN};

std::string to_string(ClassifierKind k);
ClassifierKind classifier_from_string(std::string_view s);

struct ClassifierParams {
  double svm_c = 1.0;
  double svm_gamma = 0.0;  // 0 means 1 / n_features
  double svm_tol = 1e-3;
  int nn_hidden = 16;
  double nn_lr = 0.01;
  int nn_epochs = 200;
  int nn_batch = 16;
  int tree_max_depth = 5;
  double logreg_lambda = 1e-3;
  int knn_k = 5;
  double lda_ridge = 1e-6;
};

// Labels: 1 = clean, 0 = noisy.
using Labels = std::vector<int>;

// z-score statistics from the training rows; zero-variance columns keep
// scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// Works in standardized coordinates. score() is the model's belief that the
// input is clean, in [0, 1].
class Classifier {
public:
  virtual ~Classifier() = default;
  [[nodiscard]] virtual ClassifierKind kind() const = 0;
  [[nodiscard]] virtual double score(const Eigen::VectorXd& z) const = 0;
  [[nodiscard]] virtual nlohmann::json shape() const = 0;
  [[nodiscard]] virtual std::vector<double> params() const = 0;
};

std::unique_ptr<Classifier> fit_classifier(ClassifierKind kind, const Eigen::MatrixXd& z,
                                           const Labels& y, std::uint64_t seed,
                                           const ClassifierParams& p = {});
std::unique_ptr<Classifier> restore_classifier(ClassifierKind kind, const nlohmann::json& shape,
                                               std::span<const double> params);

// Column subset, standardizer and classifier bundled; takes the full raw
// input row.
class TrainedModel {
public:
  TrainedModel(std::size_t input_dim, std::vector<std::size_t> features, Standardizer stats,
               std::shared_ptr<const Classifier> impl);

  [[nodiscard]] ClassifierKind kind() const { return impl_->kind(); }
  [[nodiscard]] std::size_t input_dim() const { return input_dim_; }
  [[nodiscard]] const std::vector<std::size_t>& features() const { return features_; }
  [[nodiscard]] const Standardizer& standardizer() const { return stats_; }
  [[nodiscard]] const Classifier& classifier() const { return *impl_; }

  [[nodiscard]] double score(std::span<const double> raw) const;
  [[nodiscard]] bool predict_clean(std::span<const double> raw) const { return score(raw) > 0.5; }
  // Percent of rows predicted correctly.
  [[nodiscard]] double accuracy(const Eigen::MatrixXd& x, const Labels& y) const;

private:
  std::size_t input_dim_;
  std::vector<std::size_t> features_;
  Standardizer stats_;
  std::shared_ptr<const Classifier> impl_;
};

// `features` empty selects every column. Throws PreconditionError unless
// each class has at least two rows.
TrainedModel train_classifier(ClassifierKind kind, const Eigen::MatrixXd& x, const Labels& y,
                              std::uint64_t seed, std::vector<std::size_t> features = {},
                              const ClassifierParams& p = {});

// Metadata as JSON, every number in the blob.
struct SerializedModel {
  nlohmann::json meta;
  std::vector<double> blob;
};
SerializedModel serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(const nlohmann::json& meta, std::span<const double> blob);

}  // namespace emgdecon
