#include "emgdecon/reward/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emgdecon/error.hpp"
#include "emgdecon/random.hpp"

namespace emgdecon {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::SVM: return "SVM";
    case ClassifierKind::LDA: return "LDA";
    case ClassifierKind::NN: return "NN";
    case ClassifierKind::DecisionTree: return "DecisionTree";
    case ClassifierKind::LogisticRegression: return "LogisticRegression";
    case ClassifierKind::KNN: return "KNN";
  }
  throw PreconditionError("bad classifier kind");
}

ClassifierKind classifier_from_string(std::string_view s) {
  for (auto k : kAllClassifiers) {
    if (to_string(k) == s) return k;
  }
  throw PreconditionError("unknown classifier: " + std::string(s));
}

Standardizer Standardizer::fit(const MatrixXd& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

VectorXd Standardizer::apply(const VectorXd& x) const {
  return (x - mean).cwiseQuotient(scale);
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  MatrixXd z = x.rowwise() - mean.transpose();
  return z.array().rowwise() / scale.transpose().array();
}

namespace {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::vector<double> to_vec(const MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

void expect_size(std::span<const double> p, std::size_t n, const char* who) {
  if (p.size() != n) throw IoError(std::string(who) + ": parameter blob has wrong size");
}

// ---- RBF support vector machine, SMO with maximal violating pairs.
class Svm final : public Classifier {
public:
  Svm(MatrixXd sv, VectorXd coef, double rho, double gamma)
      : sv_(std::move(sv)), coef_(std::move(coef)), rho_(rho), gamma_(gamma) {}

  static std::unique_ptr<Svm> fit(const MatrixXd& z, const Labels& labels, const ClassifierParams& p) {
    const auto n = static_cast<std::size_t>(z.rows());
    const double gamma = p.svm_gamma > 0 ? p.svm_gamma : 1.0 / static_cast<double>(z.cols());
    const double c = p.svm_c;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;
    MatrixXd k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double v = std::exp(-gamma * (z.row(i) - z.row(j)).squaredNorm());
        k(i, j) = v;
        k(j, i) = v;
      }
    }
    auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(i, j); };
    std::vector<double> a(n, 0.0), g(n, -1.0);
    const std::size_t max_iter = std::max<std::size_t>(10000000, 100 * n);
    constexpr double kTau = 1e-12;
    for (std::size_t it = 0; it < max_iter; ++it) {
      double gmax = -std::numeric_limits<double>::infinity();
      double gmin = std::numeric_limits<double>::infinity();
      std::size_t i = n, j = n;
      for (std::size_t t = 0; t < n; ++t) {
        const double v = -y[t] * g[t];
        const bool up = (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0);
        const bool low = (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < c);
        if (up && v > gmax) { gmax = v; i = t; }
        if (low && v < gmin) { gmin = v; j = t; }
      }
      if (i == n || j == n || gmax - gmin < p.svm_tol) break;

      const double ai = a[i], aj = a[j];
      if (y[i] != y[j]) {
        double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
        if (quad <= 0) quad = kTau;
        const double delta = (-g[i] - g[j]) / quad;
        const double diff = a[i] - a[j];
        a[i] += delta;
        a[j] += delta;
        if (diff > 0) {
          if (a[j] < 0) { a[j] = 0; a[i] = diff; }
        } else if (a[i] < 0) {
          a[i] = 0; a[j] = -diff;
        }
        if (diff > 0) {
          if (a[i] > c) { a[i] = c; a[j] = c - diff; }
        } else if (a[j] > c) {
          a[j] = c; a[i] = c + diff;
        }
      } else {
        double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
        if (quad <= 0) quad = kTau;
        const double delta = (g[i] - g[j]) / quad;
        const double sum = a[i] + a[j];
        a[i] -= delta;
        a[j] += delta;
        if (sum > c) {
          if (a[i] > c) { a[i] = c; a[j] = sum - c; }
        } else if (a[j] < 0) {
          a[j] = 0; a[i] = sum;
        }
        if (sum > c) {
          if (a[j] > c) { a[j] = c; a[i] = sum - c; }
        } else if (a[i] < 0) {
          a[i] = 0; a[j] = sum;
        }
      }
      const double di = a[i] - ai, dj = a[j] - aj;
      for (std::size_t t = 0; t < n; ++t) g[t] += q(i, t) * di + q(j, t) * dj;
    }

    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double yg = y[t] * g[t];
      if (a[t] >= c) {
        if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (a[t] <= 0) {
        if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < n; ++t) {
      if (a[t] > 0) idx.push_back(t);
    }
    MatrixXd sv(idx.size(), z.cols());
    VectorXd coef(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      sv.row(static_cast<Eigen::Index>(r)) = z.row(idx[r]);
      coef(static_cast<Eigen::Index>(r)) = a[idx[r]] * y[idx[r]];
    }
    return std::make_unique<Svm>(std::move(sv), std::move(coef), rho, gamma);
  }

  ClassifierKind kind() const override { return ClassifierKind::SVM; }
  double decision(const VectorXd& x) const {
    double f = -rho_;
    for (Eigen::Index r = 0; r < sv_.rows(); ++r) {
      f += coef_(r) * std::exp(-gamma_ * (sv_.row(r).transpose() - x).squaredNorm());
    }
    return f;
  }
  double score(const VectorXd& x) const override { return sigmoid(decision(x)); }
  nlohmann::json shape() const override {
    return {{"n_sv", sv_.rows()}, {"dim", sv_.cols()}};
  }
  std::vector<double> params() const override {
    std::vector<double> out = to_vec(sv_);
    out.insert(out.end(), coef_.data(), coef_.data() + coef_.size());
    out.push_back(rho_);
    out.push_back(gamma_);
    return out;
  }
  static std::unique_ptr<Svm> restore(const nlohmann::json& s, std::span<const double> p) {
    const auto n = s.at("n_sv").get<Eigen::Index>();
    const auto d = s.at("dim").get<Eigen::Index>();
    expect_size(p, static_cast<std::size_t>(n * d + n + 2), "SVM");
    MatrixXd sv = Eigen::Map<const MatrixXd>(p.data(), n, d);
    VectorXd coef = Eigen::Map<const VectorXd>(p.data() + n * d, n);
    return std::make_unique<Svm>(std::move(sv), std::move(coef), p[n * d + n], p[n * d + n + 1]);
  }

private:
  MatrixXd sv_;
  VectorXd coef_;
  double rho_;
  double gamma_;
};

// ---- Linear models share a (w, b) form: LDA and logistic regression.
class Linear final : public Classifier {
public:
  Linear(ClassifierKind kind, VectorXd w, double b) : kind_(kind), w_(std::move(w)), b_(b) {}
  ClassifierKind kind() const override { return kind_; }
  double score(const VectorXd& x) const override { return sigmoid(w_.dot(x) + b_); }
  nlohmann::json shape() const override { return {{"dim", w_.size()}}; }
  std::vector<double> params() const override {
    std::vector<double> out(w_.data(), w_.data() + w_.size());
    out.push_back(b_);
    return out;
  }
  static std::unique_ptr<Linear> restore(ClassifierKind kind, const nlohmann::json& s,
                                         std::span<const double> p) {
    const auto d = s.at("dim").get<Eigen::Index>();
    expect_size(p, static_cast<std::size_t>(d + 1), "linear model");
    return std::make_unique<Linear>(kind, Eigen::Map<const VectorXd>(p.data(), d), p[d]);
  }

private:
  ClassifierKind kind_;
  VectorXd w_;
  double b_;
};

std::unique_ptr<Linear> fit_lda(const MatrixXd& z, const Labels& y, const ClassifierParams& p) {
  const Eigen::Index d = z.cols();
  VectorXd mu[2] = {VectorXd::Zero(d), VectorXd::Zero(d)};
  double cnt[2] = {0, 0};
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    mu[y[i]] += z.row(i).transpose();
    cnt[y[i]] += 1;
  }
  mu[0] /= cnt[0];
  mu[1] /= cnt[1];
  MatrixXd cov = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const VectorXd r = z.row(i).transpose() - mu[y[i]];
    cov += r * r.transpose();
  }
  cov /= std::max(1.0, static_cast<double>(z.rows()) - 2.0);
  cov += p.lda_ridge * MatrixXd::Identity(d, d);
  const VectorXd w = cov.ldlt().solve(mu[1] - mu[0]);
  const double b = -0.5 * w.dot(mu[1] + mu[0]) + std::log(cnt[1] / cnt[0]);
  if (!w.allFinite() || !std::isfinite(b)) throw NumericError("LDA: singular covariance");
  return std::make_unique<Linear>(ClassifierKind::LDA, w, b);
}

// L2-penalized mean log-loss (intercept unpenalized), Newton with backtracking.
std::unique_ptr<Linear> fit_logreg(const MatrixXd& z, const Labels& y, const ClassifierParams& p) {
  const Eigen::Index n = z.rows(), d = z.cols();
  MatrixXd xa(n, d + 1);
  xa << z, VectorXd::Ones(n);
  VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = y[i];
  VectorXd beta = VectorXd::Zero(d + 1);
  const double lam = p.logreg_lambda;
  auto objective = [&](const VectorXd& b) {
    double loss = 0.0;
    const VectorXd eta = xa * b;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + e^eta) - t * eta, stably
      const double e = eta(i);
      loss += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - t(i) * e;
    }
    return loss / static_cast<double>(n) + 0.5 * lam * b.head(d).squaredNorm();
  };
  double f = objective(beta);
  for (int it = 0; it < 100; ++it) {
    const VectorXd eta = xa * beta;
    VectorXd pr(n), wt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pr(i) = sigmoid(eta(i));
      wt(i) = pr(i) * (1.0 - pr(i));
    }
    VectorXd grad = xa.transpose() * (pr - t) / static_cast<double>(n);
    grad.head(d) += lam * beta.head(d);
    MatrixXd h = xa.transpose() * wt.asDiagonal() * xa / static_cast<double>(n);
    h.diagonal().head(d).array() += lam;
    h(d, d) += 1e-12;
    const VectorXd step = h.ldlt().solve(grad);
    double s = 1.0;
    VectorXd next = beta - step;
    double fn = objective(next);
    while (fn > f && s > 1e-10) {
      s *= 0.5;
      next = beta - s * step;
      fn = objective(next);
    }
    const double moved = (next - beta).norm();
    beta = next;
    f = fn;
    if (moved < 1e-10) break;
  }
  if (!beta.allFinite()) throw NumericError("LogisticRegression: diverged");
  return std::make_unique<Linear>(ClassifierKind::LogisticRegression, beta.head(d), beta(d));
}

// ---- d-h-2 tanh network with a softmax head.
class Mlp final : public Classifier {
public:
  Mlp(MatrixXd w1, VectorXd b1, MatrixXd w2, VectorXd b2)
      : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {}

  static std::unique_ptr<Mlp> fit(const MatrixXd& z, const Labels& y, std::uint64_t seed,
                                  const ClassifierParams& p) {
    const Eigen::Index n = z.rows(), d = z.cols(), h = p.nn_hidden;
    Rng rng(seed);
    auto glorot = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
      const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> u(-lim, lim);
      MatrixXd m(fan_out, fan_in);
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
      }
      return m;
    };
    MatrixXd w1 = glorot(d, h), w2 = glorot(h, 2);
    VectorXd b1 = VectorXd::Zero(h), b2 = VectorXd::Zero(2);

    // Adam state for the four blocks.
    MatrixXd mw1 = MatrixXd::Zero(h, d), vw1 = mw1, mw2 = MatrixXd::Zero(2, h), vw2 = mw2;
    VectorXd mb1 = VectorXd::Zero(h), vb1 = mb1, mb2 = VectorXd::Zero(2), vb2 = mb2;
    const double b1c = 0.9, b2c = 0.999, eps = 1e-8;
    int step = 0;
    auto adam = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = b1c * m + (1 - b1c) * g;
      v = b2c * v + (1 - b2c) * g.cwiseProduct(g);
      const double c1 = 1 - std::pow(b1c, step), c2 = 1 - std::pow(b2c, step);
      param.array() -= p.nn_lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < p.nn_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index start = 0; start < n; start += p.nn_batch) {
        const Eigen::Index end = std::min<Eigen::Index>(n, start + p.nn_batch);
        const double bs = static_cast<double>(end - start);
        MatrixXd gw1 = MatrixXd::Zero(h, d), gw2 = MatrixXd::Zero(2, h);
        VectorXd gb1 = VectorXd::Zero(h), gb2 = VectorXd::Zero(2);
        for (Eigen::Index k = start; k < end; ++k) {
          const Eigen::Index i = order[static_cast<std::size_t>(k)];
          const VectorXd x = z.row(i).transpose();
          const VectorXd a = (w1 * x + b1).array().tanh();
          const VectorXd o = w2 * a + b2;
          VectorXd pr = (o.array() - o.maxCoeff()).exp();
          pr /= pr.sum();
          VectorXd dout = pr;
          dout(y[static_cast<std::size_t>(i)]) -= 1.0;
          gw2 += dout * a.transpose();
          gb2 += dout;
          const VectorXd da = (w2.transpose() * dout).cwiseProduct((1.0 - a.array().square()).matrix());
          gw1 += da * x.transpose();
          gb1 += da;
        }
        ++step;
        gw1 /= bs; gb1 /= bs; gw2 /= bs; gb2 /= bs;
        adam(w1, mw1, vw1, gw1);
        adam(b1, mb1, vb1, gb1);
        adam(w2, mw2, vw2, gw2);
        adam(b2, mb2, vb2, gb2);
      }
    }
    if (!w1.allFinite() || !w2.allFinite()) throw NumericError("NN: diverged");
    return std::make_unique<Mlp>(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
  }

  ClassifierKind kind() const override { return ClassifierKind::NN; }
  double score(const VectorXd& x) const override {
    const VectorXd a = (w1_ * x + b1_).array().tanh();
    const VectorXd o = w2_ * a + b2_;
    // P(class 1) under softmax of two logits.
    return sigmoid(o(1) - o(0));
  }
  nlohmann::json shape() const override { return {{"dim", w1_.cols()}, {"hidden", w1_.rows()}}; }
  std::vector<double> params() const override {
    std::vector<double> out = to_vec(w1_);
    out.insert(out.end(), b1_.data(), b1_.data() + b1_.size());
    const auto w2 = to_vec(w2_);
    out.insert(out.end(), w2.begin(), w2.end());
    out.insert(out.end(), b2_.data(), b2_.data() + b2_.size());
    return out;
  }
  static std::unique_ptr<Mlp> restore(const nlohmann::json& s, std::span<const double> p) {
    const auto d = s.at("dim").get<Eigen::Index>();
    const auto h = s.at("hidden").get<Eigen::Index>();
    expect_size(p, static_cast<std::size_t>(h * d + h + 2 * h + 2), "NN");
    const double* q = p.data();
    MatrixXd w1 = Eigen::Map<const MatrixXd>(q, h, d);
    q += h * d;
    VectorXd b1 = Eigen::Map<const VectorXd>(q, h);
    q += h;
    MatrixXd w2 = Eigen::Map<const MatrixXd>(q, 2, h);
    q += 2 * h;
    VectorXd b2 = Eigen::Map<const VectorXd>(q, 2);
    return std::make_unique<Mlp>(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
  }

private:
  MatrixXd w1_;
  VectorXd b1_;
  MatrixXd w2_;
  VectorXd b2_;
};

// ---- CART with Gini impurity. Nodes stored flat; leaves have feature -1.
class Tree final : public Classifier {
public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // fraction clean among training rows at the node
  };

  explicit Tree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  static std::unique_ptr<Tree> fit(const MatrixXd& z, const Labels& y, const ClassifierParams& p) {
    std::vector<Node> nodes;
    std::vector<Eigen::Index> all(static_cast<std::size_t>(z.rows()));
    std::iota(all.begin(), all.end(), 0);
    grow(z, y, all, 0, p.tree_max_depth, nodes);
    return std::make_unique<Tree>(std::move(nodes));
  }

  ClassifierKind kind() const override { return ClassifierKind::DecisionTree; }
  double score(const VectorXd& x) const override {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(i)];
      i = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }
  nlohmann::json shape() const override { return {{"nodes", nodes_.size()}}; }
  std::vector<double> params() const override {
    std::vector<double> out;
    for (const auto& n : nodes_) {
      out.insert(out.end(), {static_cast<double>(n.feature), n.threshold,
                             static_cast<double>(n.left), static_cast<double>(n.right), n.value});
    }
    return out;
  }
  static std::unique_ptr<Tree> restore(const nlohmann::json& s, std::span<const double> p) {
    const auto count = s.at("nodes").get<std::size_t>();
    expect_size(p, 5 * count, "DecisionTree");
    std::vector<Node> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
      nodes[i] = {static_cast<int>(p[5 * i]), p[5 * i + 1], static_cast<int>(p[5 * i + 2]),
                  static_cast<int>(p[5 * i + 3]), p[5 * i + 4]};
      const bool leaf = nodes[i].feature < 0;
      const auto bad = [&](int c) { return c <= static_cast<int>(i) || c >= static_cast<int>(count); };
      if (!leaf && (bad(nodes[i].left) || bad(nodes[i].right))) {
        throw IoError("DecisionTree: corrupt node links");
      }
    }
    if (count == 0) throw IoError("DecisionTree: no nodes");
    return std::make_unique<Tree>(std::move(nodes));
  }

private:
  static int grow(const MatrixXd& z, const Labels& y, const std::vector<Eigen::Index>& rows,
                  int depth, int max_depth, std::vector<Node>& nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    double pos = 0;
    for (auto r : rows) pos += y[static_cast<std::size_t>(r)];
    const double total = static_cast<double>(rows.size());
    nodes[static_cast<std::size_t>(id)].value = pos / total;
    if (depth >= max_depth || pos == 0 || pos == total || rows.size() < 2) return id;

    auto gini = [](double p1, double n) { return n > 0 ? 1.0 - (p1 / n) * (p1 / n) - (1 - p1 / n) * (1 - p1 / n) : 0.0; };
    const double parent = gini(pos, total);
    double best_gain = 1e-12;
    int best_f = -1;
    double best_t = 0.0;
    std::vector<std::pair<double, int>> col(rows.size());
    for (Eigen::Index f = 0; f < z.cols(); ++f) {
      for (std::size_t k = 0; k < rows.size(); ++k) col[k] = {z(rows[k], f), y[static_cast<std::size_t>(rows[k])]};
      std::sort(col.begin(), col.end());
      double left_pos = 0;
      for (std::size_t k = 0; k + 1 < col.size(); ++k) {
        left_pos += col[k].second;
        if (col[k].first == col[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1), nr = total - nl;
        const double child = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / total;
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_t = 0.5 * (col[k].first + col[k + 1].first);
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<Eigen::Index> lo, hi;
    for (auto r : rows) (z(r, best_f) <= best_t ? lo : hi).push_back(r);
    const int l = grow(z, y, lo, depth + 1, max_depth, nodes);
    const int h = grow(z, y, hi, depth + 1, max_depth, nodes);
    auto& nd = nodes[static_cast<std::size_t>(id)];
    nd.feature = best_f;
    nd.threshold = best_t;
    nd.left = l;
    nd.right = h;
    return id;
  }

  std::vector<Node> nodes_;
};

// ---- k nearest neighbours over the stored standardized training rows.
class Knn final : public Classifier {
public:
  Knn(MatrixXd x, VectorXd y, int k) : x_(std::move(x)), y_(std::move(y)), k_(k) {}
  ClassifierKind kind() const override { return ClassifierKind::KNN; }
  double score(const VectorXd& q) const override {
    std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(x_.rows()));
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      d[static_cast<std::size_t>(i)] = {(x_.row(i).transpose() - q).squaredNorm(), i};
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_), d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += y_(d[i].second);
    return s / static_cast<double>(k);
  }
  nlohmann::json shape() const override {
    return {{"rows", x_.rows()}, {"dim", x_.cols()}, {"k", k_}};
  }
  std::vector<double> params() const override {
    std::vector<double> out = to_vec(x_);
    out.insert(out.end(), y_.data(), y_.data() + y_.size());
    return out;
  }
  static std::unique_ptr<Knn> restore(const nlohmann::json& s, std::span<const double> p) {
    const auto n = s.at("rows").get<Eigen::Index>();
    const auto d = s.at("dim").get<Eigen::Index>();
    expect_size(p, static_cast<std::size_t>(n * d + n), "KNN");
    return std::make_unique<Knn>(Eigen::Map<const MatrixXd>(p.data(), n, d),
                                 Eigen::Map<const VectorXd>(p.data() + n * d, n),
                                 s.at("k").get<int>());
  }

private:
  MatrixXd x_;
  VectorXd y_;
  int k_;
};

}  // namespace

std::unique_ptr<Classifier> fit_classifier(ClassifierKind kind, const MatrixXd& z, const Labels& y,
                                           std::uint64_t seed, const ClassifierParams& p) {
  if (static_cast<std::size_t>(z.rows()) != y.size() || z.rows() == 0 || z.cols() == 0) {
    throw PreconditionError("fit_classifier: empty or mismatched training data");
  }
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw PreconditionError("fit_classifier: labels must be 0 or 1");
    pos += static_cast<std::size_t>(v);
  }
  if (pos < 2 || y.size() - pos < 2) {
    throw PreconditionError("fit_classifier: degenerate class distribution (need 2 per class)");
  }
  switch (kind) {
    case ClassifierKind::SVM: return Svm::fit(z, y, p);
    case ClassifierKind::LDA: return fit_lda(z, y, p);
    case ClassifierKind::NN: return Mlp::fit(z, y, seed, p);
    case ClassifierKind::DecisionTree: return Tree::fit(z, y, p);
    case ClassifierKind::LogisticRegression: return fit_logreg(z, y, p);
    case ClassifierKind::KNN: {
      VectorXd t(static_cast<Eigen::Index>(y.size()));
      for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i)) = y[i];
      return std::make_unique<Knn>(z, t, p.knn_k);
    }
  }
  throw PreconditionError("bad classifier kind");
}

std::unique_ptr<Classifier> restore_classifier(ClassifierKind kind, const nlohmann::json& shape,
                                               std::span<const double> params) {
  try {
    switch (kind) {
      case ClassifierKind::SVM: return Svm::restore(shape, params);
      case ClassifierKind::LDA:
      case ClassifierKind::LogisticRegression: return Linear::restore(kind, shape, params);
      case ClassifierKind::NN: return Mlp::restore(shape, params);
      case ClassifierKind::DecisionTree: return Tree::restore(shape, params);
      case ClassifierKind::KNN: return Knn::restore(shape, params);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad model shape: ") + e.what());
  }
  throw PreconditionError("bad classifier kind");
}

TrainedModel::TrainedModel(std::size_t input_dim, std::vector<std::size_t> features,
                           Standardizer stats, std::shared_ptr<const Classifier> impl)
    : input_dim_(input_dim), features_(std::move(features)), stats_(std::move(stats)),
      impl_(std::move(impl)) {
  if (!impl_) throw PreconditionError("TrainedModel: missing classifier");
  if (features_.empty()) throw PreconditionError("TrainedModel: empty feature subset");
  for (auto f : features_) {
    if (f >= input_dim_) throw PreconditionError("TrainedModel: feature index out of range");
  }
  if (static_cast<std::size_t>(stats_.mean.size()) != features_.size() ||
      static_cast<std::size_t>(stats_.scale.size()) != features_.size()) {
    throw PreconditionError("TrainedModel: standardizer size mismatch");
  }
}

double TrainedModel::score(std::span<const double> raw) const {
  if (raw.size() != input_dim_) throw PreconditionError("TrainedModel: wrong input width");
  VectorXd x(static_cast<Eigen::Index>(features_.size()));
  for (std::size_t i = 0; i < features_.size(); ++i) x(static_cast<Eigen::Index>(i)) = raw[features_[i]];
  return impl_->score(stats_.apply(x));
}

double TrainedModel::accuracy(const MatrixXd& x, const Labels& y) const {
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) {
    throw PreconditionError("accuracy: empty or mismatched data");
  }
  std::size_t hit = 0;
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    if (static_cast<int>(predict_clean(row)) == y[static_cast<std::size_t>(i)]) ++hit;
  }
  return 100.0 * static_cast<double>(hit) / static_cast<double>(x.rows());
}

TrainedModel train_classifier(ClassifierKind kind, const MatrixXd& x, const Labels& y,
                              std::uint64_t seed, std::vector<std::size_t> features,
                              const ClassifierParams& p) {
  if (features.empty()) {
    features.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
  }
  MatrixXd sub(x.rows(), static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j] >= static_cast<std::size_t>(x.cols())) {
      throw PreconditionError("train_classifier: feature index out of range");
    }
    sub.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(features[j]));
  }
  auto stats = Standardizer::fit(sub);
  std::shared_ptr<const Classifier> impl = fit_classifier(kind, stats.apply(sub), y, seed, p);
  return TrainedModel(static_cast<std::size_t>(x.cols()), std::move(features), std::move(stats),
                      std::move(impl));
}

SerializedModel serialize_model(const TrainedModel& m) {
  SerializedModel s;
  s.meta = {{"kind", to_string(m.kind())},
            {"input_dim", m.input_dim()},
            {"features", m.features()},
            {"shape", m.classifier().shape()}};
  const auto& st = m.standardizer();
  s.blob.assign(st.mean.data(), st.mean.data() + st.mean.size());
  s.blob.insert(s.blob.end(), st.scale.data(), st.scale.data() + st.scale.size());
  const auto p = m.classifier().params();
  s.blob.insert(s.blob.end(), p.begin(), p.end());
  return s;
}

TrainedModel deserialize_model(const nlohmann::json& meta, std::span<const double> blob) {
  try {
    const auto kind = classifier_from_string(meta.at("kind").get<std::string>());
    auto features = meta.at("features").get<std::vector<std::size_t>>();
    const auto dim = meta.at("input_dim").get<std::size_t>();
    const std::size_t f = features.size();
    if (blob.size() < 2 * f) throw IoError("model blob too short");
    Standardizer st;
    st.mean = Eigen::Map<const VectorXd>(blob.data(), static_cast<Eigen::Index>(f));
    st.scale = Eigen::Map<const VectorXd>(blob.data() + f, static_cast<Eigen::Index>(f));
    std::shared_ptr<const Classifier> impl =
        restore_classifier(kind, meta.at("shape"), blob.subspan(2 * f));
    return TrainedModel(dim, std::move(features), std::move(st), std::move(impl));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad model metadata: ") + e.what());
  }
}

}  // namespace emgdecon
