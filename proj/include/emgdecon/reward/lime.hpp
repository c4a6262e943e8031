#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace emgdecon {

struct LimeConfig {
  std::size_t samples = 1000;
  double kernel_width_factor = 0.75;  // width = factor * sqrt(n_features)
  double ridge = 0.01;
  std::size_t min_background = 100;
};

struct LimeExplanation {
  std::vector<double> weights;  // per feature, on standardized inputs
  double intercept = 0.0;
  double kernel_width = 0.0;
  std::size_t samples = 0;
};

using ScoreFn = std::function<double(std::span<const double>)>;

// Tabular local surrogate. Perturbations draw each feature independently
// from the background column; they are weighted by an exponential kernel on
// the standardized distance to the instance, and a weighted ridge regression
// (intercept unpenalized) on the standardized perturbations gives the weights.
LimeExplanation lime_explain(const ScoreFn& model, std::span<const double> instance,
                             const Eigen::MatrixXd& background, std::uint64_t seed,
                             const LimeConfig& cfg = {});

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace emgdecon
