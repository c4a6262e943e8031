#pragma once

#include <cstddef>
#include <vector>

#include "emgdecon/features.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/random.hpp"

namespace emgdecon {

struct Transition {
  FeatureVector s;
  FilterAction a = FilterAction::HPF;
  double r = 0.0;
  FeatureVector s_next;
  bool terminal = false;
};

// Ring buffer; once full the oldest transition is overwritten.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(const Transition& t);
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  // Oldest first.
  [[nodiscard]] const Transition& at(std::size_t i) const;

  // Uniform, without replacement within the batch.
  [[nodiscard]] std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

}  // namespace emgdecon
