#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "emgdecon/features.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/random.hpp"

namespace emgdecon {

inline constexpr std::size_t kActionCount = 3;
using QValues = std::array<double, kActionCount>;

// Fully connected ReLU network, 6 inputs -> hidden... -> 3 Q-values. All
// weights and biases live in one flat vector theta; per layer the weight
// matrix (row-major, out x in) comes before the bias. Inputs are z-scored
// with fixed statistics before the first layer.
class QNetwork {
public:
  QNetwork() : QNetwork(std::vector<std::size_t>{32, 32}) {}
  explicit QNetwork(std::vector<std::size_t> hidden, std::size_t inputs = kFeatureCount,
                    std::size_t outputs = kActionCount);

  [[nodiscard]] std::size_t param_count() const { return theta_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  [[nodiscard]] std::span<const double> params() const { return theta_; }
  [[nodiscard]] std::span<double> params() { return theta_; }
  void set_params(std::span<const double> p);

  // He-uniform weights, zero biases.
  void init(Rng& rng);

  void set_input_norm(std::vector<double> mean, std::vector<double> scale);
  [[nodiscard]] const std::vector<double>& input_mean() const { return in_mean_; }
  [[nodiscard]] const std::vector<double>& input_scale() const { return in_scale_; }

  [[nodiscard]] QValues forward(std::span<const double> x) const;
  [[nodiscard]] QValues forward(const FeatureVector& s) const;

  // Adds dL/dtheta to `grad` given dL/dQ at input x.
  void backward(std::span<const double> x, const QValues& dq, std::span<double> grad) const;

private:
  std::vector<double> normalize(std::span<const double> x) const;

  std::vector<std::size_t> sizes_;
  std::vector<double> theta_;
  std::vector<double> in_mean_;
  std::vector<double> in_scale_;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

AdamState make_adam_state(std::size_t n);
void adam_step(AdamState& st, std::span<double> theta, std::span<const double> grad,
               const AdamConfig& cfg);

// Rescales g in place so its L2 norm is at most `max_norm` (<= 0 disables).
// Returns the norm before clipping.
double clip_grad_norm(std::span<double> g, double max_norm);

}  // namespace emgdecon
