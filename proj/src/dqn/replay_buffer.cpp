#include "emgdecon/dqn/replay_buffer.hpp"

#include <algorithm>

#include "emgdecon/error.hpp"

namespace emgdecon {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw PreconditionError("ReplayBuffer: zero capacity");
  data_.reserve(std::min<std::size_t>(capacity_, 1u << 16));
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
    return;
  }
  data_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw PreconditionError("ReplayBuffer: index out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch == 0 || batch > data_.size()) {
    throw PreconditionError("ReplayBuffer: batch larger than buffer");
  }
  // Floyd's algorithm: batch distinct indices in O(batch^2) regardless of size.
  std::vector<std::size_t> pick;
  pick.reserve(batch);
  const std::size_t n = data_.size();
  for (std::size_t j = n - batch; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const bool seen = std::find(pick.begin(), pick.end(), t) != pick.end();
    pick.push_back(seen ? j : t);
  }
  std::vector<Transition> out;
  out.reserve(batch);
  for (auto i : pick) out.push_back(data_[i]);
  return out;
}

}  // namespace emgdecon
