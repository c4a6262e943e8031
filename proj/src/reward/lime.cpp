#include "emgdecon/reward/lime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emgdecon/error.hpp"
#include "emgdecon/random.hpp"

namespace emgdecon {

LimeExplanation lime_explain(const ScoreFn& model, std::span<const double> instance,
                             const Eigen::MatrixXd& background, std::uint64_t seed,
                             const LimeConfig& cfg) {
  const Eigen::Index d = background.cols();
  const Eigen::Index n_bg = background.rows();
  if (static_cast<std::size_t>(d) != instance.size() || d == 0) {
    throw PreconditionError("lime_explain: instance width does not match background");
  }
  if (static_cast<std::size_t>(n_bg) < cfg.min_background) {
    throw PreconditionError("lime_explain: need at least " + std::to_string(cfg.min_background) +
                            " background rows");
  }
  if (cfg.samples < 2) throw PreconditionError("lime_explain: too few samples");

  const Eigen::VectorXd mean = background.colwise().mean().transpose();
  Eigen::VectorXd scale(d);
  bool any_var = false;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (background.col(j).array() - mean(j)).square().mean();
    any_var = any_var || var > 0.0;
    scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  if (!any_var) throw PreconditionError("lime_explain: degenerate background (no variance)");

  const auto m = static_cast<Eigen::Index>(cfg.samples);
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n_bg - 1);
  Eigen::MatrixXd z(m, d);
  Eigen::VectorXd target(m), weight(m);
  Eigen::VectorXd z0(d);
  for (Eigen::Index j = 0; j < d; ++j) z0(j) = (instance[static_cast<std::size_t>(j)] - mean(j)) / scale(j);

  const double width = cfg.kernel_width_factor * std::sqrt(static_cast<double>(d));
  std::vector<double> raw(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < m; ++i) {
    // The first row is the instance itself, as in the reference tabular explainer.
    for (Eigen::Index j = 0; j < d; ++j) {
      raw[static_cast<std::size_t>(j)] =
          i == 0 ? instance[static_cast<std::size_t>(j)] : background(pick(rng), j);
      z(i, j) = (raw[static_cast<std::size_t>(j)] - mean(j)) / scale(j);
    }
    target(i) = model(raw);
    const double dist2 = (z.row(i).transpose() - z0).squaredNorm();
    weight(i) = std::exp(-dist2 / (width * width));
  }

  // Weighted ridge with centred columns so the intercept is unpenalized.
  const double wsum = weight.sum();
  if (!(wsum > 0.0)) throw NumericError("lime_explain: all kernel weights vanished");
  const Eigen::VectorXd zbar = (z.transpose() * weight) / wsum;
  const double ybar = weight.dot(target) / wsum;
  const Eigen::MatrixXd zc = z.rowwise() - zbar.transpose();
  const Eigen::VectorXd yc = target.array() - ybar;
  Eigen::MatrixXd a = zc.transpose() * weight.asDiagonal() * zc;
  a.diagonal().array() += cfg.ridge;
  const Eigen::VectorXd w = a.ldlt().solve(zc.transpose() * weight.asDiagonal() * yc);
  if (!w.allFinite()) throw NumericError("lime_explain: regression failed");

  LimeExplanation out;
  out.weights.assign(w.data(), w.data() + w.size());
  out.intercept = ybar - zbar.dot(w);
  out.kernel_width = width;
  out.samples = cfg.samples;
  return out;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw PreconditionError("spearman: bad lengths");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) throw NumericError("spearman: constant input");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace emgdecon
