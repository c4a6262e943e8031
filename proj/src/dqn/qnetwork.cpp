#include "emgdecon/dqn/qnetwork.hpp"

#include <algorithm>
#include <cmath>

#include "emgdecon/error.hpp"

namespace emgdecon {

QNetwork::QNetwork(std::vector<std::size_t> hidden, std::size_t inputs, std::size_t outputs) {
  if (outputs != kActionCount) throw PreconditionError("QNetwork: output width must be 3");
  if (inputs == 0) throw PreconditionError("QNetwork: no inputs");
  sizes_.push_back(inputs);
  for (auto h : hidden) {
    if (h == 0) throw PreconditionError("QNetwork: empty hidden layer");
    sizes_.push_back(h);
  }
  sizes_.push_back(outputs);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += sizes_[l + 1] * (sizes_[l] + 1);
  theta_.assign(n, 0.0);
  in_mean_.assign(inputs, 0.0);
  in_scale_.assign(inputs, 1.0);
}

void QNetwork::set_params(std::span<const double> p) {
  if (p.size() != theta_.size()) throw PreconditionError("QNetwork: parameter count mismatch");
  std::copy(p.begin(), p.end(), theta_.begin());
}

void QNetwork::init(Rng& rng) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double lim = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (std::size_t i = 0; i < in * out; ++i) theta_[off + i] = u(rng);
    off += in * out;
    std::fill_n(theta_.begin() + static_cast<std::ptrdiff_t>(off), out, 0.0);
    off += out;
  }
}

void QNetwork::set_input_norm(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != sizes_.front() || scale.size() != sizes_.front()) {
    throw PreconditionError("QNetwork: input statistics width mismatch");
  }
  for (double s : scale) {
    if (!(s > 0.0) || !std::isfinite(s)) throw PreconditionError("QNetwork: bad input scale");
  }
  in_mean_ = std::move(mean);
  in_scale_ = std::move(scale);
}

std::vector<double> QNetwork::normalize(std::span<const double> x) const {
  if (x.size() != sizes_.front()) throw PreconditionError("QNetwork: wrong input width");
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - in_mean_[i]) / in_scale_[i];
  return z;
}

QValues QNetwork::forward(std::span<const double> x) const {
  std::vector<double> a = normalize(x);
  std::vector<double> next;
  std::size_t off = 0;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    next.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double s = theta_[off + in * out + o];
      const double* w = &theta_[off + o * in];
      for (std::size_t i = 0; i < in; ++i) s += w[i] * a[i];
      next[o] = (l + 1 < layers) ? std::max(0.0, s) : s;
    }
    off += in * out + out;
    a.swap(next);
  }
  return {a[0], a[1], a[2]};
}

QValues QNetwork::forward(const FeatureVector& s) const {
  const auto x = s.to_array();
  return forward(std::span<const double>(x));
}

void QNetwork::backward(std::span<const double> x, const QValues& dq,
                        std::span<double> grad) const {
  if (grad.size() != theta_.size()) throw PreconditionError("QNetwork: gradient size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<std::vector<double>> acts{normalize(x)};
  std::vector<std::size_t> offs;
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    offs.push_back(off);
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = theta_[off + in * out + o];
      for (std::size_t i = 0; i < in; ++i) s += theta_[off + o * in + i] * acts.back()[i];
      z[o] = (l + 1 < layers) ? std::max(0.0, s) : s;
    }
    off += in * out + out;
    acts.push_back(std::move(z));
  }
  std::vector<double> delta(dq.begin(), dq.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const std::size_t o0 = offs[l];
    const auto& a_in = acts[l];
    std::vector<double> back(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      grad[o0 + in * out + o] += d;
      for (std::size_t i = 0; i < in; ++i) {
        grad[o0 + o * in + i] += d * a_in[i];
        back[i] += d * theta_[o0 + o * in + i];
      }
    }
    if (l > 0) {
      // ReLU derivative from the stored post-activation.
      for (std::size_t i = 0; i < in; ++i) {
        if (a_in[i] <= 0.0) back[i] = 0.0;
      }
    }
    delta.swap(back);
  }
}

AdamState make_adam_state(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }

void adam_step(AdamState& st, std::span<double> theta, std::span<const double> grad,
               const AdamConfig& cfg) {
  if (theta.size() != grad.size() || st.m.size() != theta.size() || st.v.size() != theta.size()) {
    throw PreconditionError("adam_step: shape mismatch");
  }
  ++st.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    theta[i] -= cfg.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + cfg.eps);
  }
}

double clip_grad_norm(std::span<double> g, double max_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& v : g) v *= s;
  }
  return norm;
}

}  // namespace emgdecon
