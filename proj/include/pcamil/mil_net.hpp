#ifndef PCAMIL_MIL_NET_HPP
#define PCAMIL_MIL_NET_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pcamil/pca_embed.hpp"
#include "pcamil/types.hpp"

namespace pcamil {

struct MilConfig {
  std::size_t d_in = 0;
  std::size_t d_hidden = 512;
  std::size_t d_att = 128;
  std::size_t n_heads = 3;
  std::size_t feature_layers = 1;  // depth of the affine+ReLU feature MLP
  double lr = 1e-4;
  double beta1 = 0.7;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  std::size_t epochs = 10;
  double label_smoothing = 0.0;
  std::uint64_t seed = 0;
  InstanceScaling scaling = InstanceScaling::Unit;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (d_in < 1 || d_hidden < 1 || d_att < 1 || n_heads < 1 || feature_layers < 1) {
      fail("network widths and depth must be positive");
    }
    if (!(lr > 0.0) || !(adam_eps > 0.0)) fail("lr and adam_eps must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) fail("betas must lie in (0,1)");
    if (epochs < 1) fail("epochs must be >= 1");
    if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) fail("label smoothing must lie in [0, 0.5)");
  }
};

/// All learnable weights. Gradients use the same type.
struct MilParams {
  std::vector<Eigen::MatrixXd> feature_w;  // layer l: d_hidden x (d_in or d_hidden)
  std::vector<Eigen::MatrixXd> feature_b;  // d_hidden x 1
  Eigen::MatrixXd w1;                      // d_att x d_hidden, tanh branch
  Eigen::MatrixXd w4;                      // d_att x d_hidden, sigmoid branch
  Eigen::MatrixXd w2;                      // n_heads x d_att
  Eigen::MatrixXd w3;                      // n_heads x d_att
  Eigen::MatrixXd w5;                      // 1 x (n_heads * d_hidden)
  Eigen::MatrixXd b5;                      // 1 x 1

  /// Canonical tensor order, shared by the optimizer and the checkpoint file.
  std::vector<Eigen::MatrixXd*> tensors() {
    std::vector<Eigen::MatrixXd*> out;
    for (auto& w : feature_w) out.push_back(&w);
    for (auto& b : feature_b) out.push_back(&b);
    for (auto* t : {&w1, &w4, &w2, &w3, &w5, &b5}) out.push_back(t);
    return out;
  }

  std::vector<const Eigen::MatrixXd*> tensors() const {
    std::vector<const Eigen::MatrixXd*> out;
    for (auto* t : const_cast<MilParams*>(this)->tensors()) out.push_back(t);
    return out;
  }

  MilParams zeros_like() const {
    MilParams z = *this;
    for (auto* t : z.tensors()) t->setZero();
    return z;
  }

  bool all_finite() const {
    for (const auto* t : tensors()) {
      if (!t->allFinite()) return false;
    }
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
    return n;
  }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline MilParams init_params(const MilConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&](std::size_t rows, std::size_t cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    }
    return m;
  };
  MilParams p;
  for (std::size_t l = 0; l < cfg.feature_layers; ++l) {
    p.feature_w.push_back(uniform(cfg.d_hidden, l == 0 ? cfg.d_in : cfg.d_hidden));
    p.feature_b.push_back(Eigen::MatrixXd::Zero(cfg.d_hidden, 1));
  }
  p.w1 = uniform(cfg.d_att, cfg.d_hidden);
  p.w4 = uniform(cfg.d_att, cfg.d_hidden);
  p.w2 = uniform(cfg.n_heads, cfg.d_att);
  p.w3 = uniform(cfg.n_heads, cfg.d_att);
  p.w5 = uniform(1, cfg.n_heads * cfg.d_hidden);
  p.b5 = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

struct BagOutput {
  Eigen::MatrixXd h;         // k' x d_hidden
  Eigen::MatrixXd a_raw;     // k' x n_heads
  Eigen::MatrixXd a;         // k' x n_heads, each column sums to 1
  Eigen::RowVectorXd bag_vec;  // n_heads * d_hidden, head-major
  double logit = 0.0;
  double p = 0.5;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Keeps a probability strictly inside (0,1).
inline double open_unit(double p) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

/// Intermediate values kept for the backward pass.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> layer_in;   // input to each feature layer
  std::vector<Eigen::MatrixXd> layer_pre;  // pre-ReLU activations
  Eigen::MatrixXd t, s, u, v;              // tanh/sigmoid branches and head scores
  BagOutput out;
};

inline void check_shapes(const MilParams& params, const Eigen::MatrixXd& e) {
  if (params.feature_w.empty() || params.feature_w.size() != params.feature_b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature MLP has no layers");
  }
  if (e.rows() < 1) throw Error(ErrorCode::ShapeMismatch, "bag has no instances");
  if (e.cols() != params.feature_w.front().cols()) {
    throw Error(ErrorCode::ShapeMismatch, "instance dim " + std::to_string(e.cols()) +
                                              " != network input dim " +
                                              std::to_string(params.feature_w.front().cols()));
  }
  const auto dh = params.feature_w.back().rows();
  const auto nh = params.w2.rows();
  if (params.w1.cols() != dh || params.w4.cols() != dh || params.w2.cols() != params.w1.rows() ||
      params.w3.cols() != params.w4.rows() || params.w3.rows() != nh || params.w5.cols() != nh * dh ||
      params.w5.rows() != 1 || params.b5.size() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "inconsistent MIL parameter shapes");
  }
}

inline ForwardTrace forward(const MilParams& params, const Eigen::MatrixXd& e) {
  check_shapes(params, e);
  ForwardTrace tr;
  Eigen::MatrixXd x = e;
  for (std::size_t l = 0; l < params.feature_w.size(); ++l) {
    tr.layer_in.push_back(x);
    Eigen::MatrixXd z = x * params.feature_w[l].transpose();
    z.rowwise() += params.feature_b[l].col(0).transpose();
    tr.layer_pre.push_back(z);
    x = z.cwiseMax(0.0);
  }
  auto& o = tr.out;
  o.h = std::move(x);

  tr.t = (o.h * params.w1.transpose()).array().tanh().matrix();
  tr.s = (o.h * params.w4.transpose()).unaryExpr([](double v) { return sigmoid(v); });
  tr.u = tr.t * params.w2.transpose();
  tr.v = tr.s * params.w3.transpose();
  o.a_raw = tr.u.cwiseProduct(tr.v);

  // softmax over instances, independently per head
  o.a.resize(o.a_raw.rows(), o.a_raw.cols());
  for (Eigen::Index j = 0; j < o.a_raw.cols(); ++j) {
    const double m = o.a_raw.col(j).maxCoeff();
    const Eigen::VectorXd ex = (o.a_raw.col(j).array() - m).exp().matrix();
    o.a.col(j) = ex / ex.sum();
  }

  const Eigen::MatrixXd pooled = o.a.transpose() * o.h;  // n_heads x d_hidden
  o.bag_vec.resize(pooled.size());
  for (Eigen::Index j = 0; j < pooled.rows(); ++j) {
    o.bag_vec.segment(j * pooled.cols(), pooled.cols()) = pooled.row(j);
  }
  o.logit = params.w5.row(0).dot(o.bag_vec) + params.b5(0, 0);
  if (!std::isfinite(o.logit) || !o.a.allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "forward pass produced NaN/Inf");
  }
  o.p = open_unit(sigmoid(o.logit));
  return tr;
}

}  // namespace detail

/// H = ReLU(E W^T + b), applied through every feature layer.
inline Eigen::MatrixXd feature_mlp(const MilParams& params, const Eigen::MatrixXd& e) {
  if (params.feature_w.empty() || e.cols() != params.feature_w.front().cols()) {
    throw Error(ErrorCode::ShapeMismatch, "instance dim does not match the feature MLP");
  }
  Eigen::MatrixXd x = e;
  for (std::size_t l = 0; l < params.feature_w.size(); ++l) {
    Eigen::MatrixXd z = x * params.feature_w[l].transpose();
    z.rowwise() += params.feature_b[l].col(0).transpose();
    x = z.cwiseMax(0.0);
  }
  return x;
}

struct Attention {
  Eigen::MatrixXd a_raw;
  Eigen::MatrixXd a;
};

/// Gated attention scores per instance and head, softmax-normalized over
/// instances.
inline Attention gated_attention(const MilParams& params, const Eigen::MatrixXd& h) {
  if (h.cols() != params.w1.cols() || h.cols() != params.w4.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "H width does not match attention weights");
  }
  const Eigen::MatrixXd t = (h * params.w1.transpose()).array().tanh().matrix();
  const Eigen::MatrixXd s = (h * params.w4.transpose()).unaryExpr([](double v) { return detail::sigmoid(v); });
  Attention att;
  att.a_raw = (t * params.w2.transpose()).cwiseProduct(s * params.w3.transpose());
  att.a.resize(att.a_raw.rows(), att.a_raw.cols());
  for (Eigen::Index j = 0; j < att.a_raw.cols(); ++j) {
    const double m = att.a_raw.col(j).maxCoeff();
    const Eigen::VectorXd ex = (att.a_raw.col(j).array() - m).exp().matrix();
    att.a.col(j) = ex / ex.sum();
  }
  return att;
}

inline BagOutput bag_probability(const MilParams& params, const Eigen::MatrixXd& e) {
  return detail::forward(params, e).out;
}

/// Inverse-frequency class weights normalized to mean 1 over the two classes.
struct ClassWeights {
  double msi = 1.0;
  double mss = 1.0;

  double of(Label l) const { return l == Label::MSI ? msi : mss; }

  static ClassWeights from_labels(const std::vector<Label>& labels) {
    const auto n = static_cast<double>(labels.size());
    const auto n_msi = static_cast<double>(std::count(labels.begin(), labels.end(), Label::MSI));
    if (n_msi == 0.0 || n_msi == n) {
      throw Error(ErrorCode::SingleClassTrainingSet, "class weights need both classes");
    }
    const double inv_msi = n / n_msi;
    const double inv_mss = n / (n - n_msi);
    const double mean = 0.5 * (inv_msi + inv_mss);
    return {inv_msi / mean, inv_mss / mean};
  }
};

inline double smoothed_target(Label y, double alpha) { return as_target(y) * (1.0 - alpha) + alpha / 2.0; }

/// Label-smoothed, class-weighted binary cross-entropy.
inline double smoothed_weighted_bce(double p, Label y, double alpha, const ClassWeights& w = {}) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DomainError, "p must lie in (0,1)");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw Error(ErrorCode::DomainError, "alpha must lie in [0,0.5)");
  const double t = smoothed_target(y, alpha);
  return w.of(y) * -(t * std::log(p) + (1.0 - t) * std::log1p(-p));
}

/// Same loss evaluated from the logit, stable when sigmoid saturates.
inline double smoothed_weighted_bce_logit(double logit, Label y, double alpha, const ClassWeights& w = {}) {
  const double t = smoothed_target(y, alpha);
  return w.of(y) * (detail::softplus(logit) - t * logit);
}

struct GradientResult {
  MilParams grad;
  double loss = 0.0;
  double p = 0.5;
};

/// Exact reverse-mode gradient of the smoothed weighted BCE through the
/// classifier, attention pooling, gated attention and feature MLP.
inline GradientResult gradients(const MilParams& params, const Eigen::MatrixXd& e, Label y, double alpha,
                                const ClassWeights& weights = {}) {
  const auto tr = detail::forward(params, e);
  const auto& o = tr.out;
  GradientResult res;
  res.p = o.p;
  res.loss = smoothed_weighted_bce_logit(o.logit, y, alpha, weights);
  auto& g = res.grad;
  g = params.zeros_like();

  const double g_logit = weights.of(y) * (detail::sigmoid(o.logit) - smoothed_target(y, alpha));
  g.w5.row(0) = g_logit * o.bag_vec;
  g.b5(0, 0) = g_logit;

  const auto nh = o.a.cols();
  const auto dh = o.h.cols();
  Eigen::MatrixXd g_pooled(nh, dh);
  for (Eigen::Index j = 0; j < nh; ++j) g_pooled.row(j) = g_logit * params.w5.row(0).segment(j * dh, dh);

  // pooled = A^T H
  const Eigen::MatrixXd g_a = o.h * g_pooled.transpose();  // k x nh
  Eigen::MatrixXd g_h = o.a * g_pooled;                     // k x dh

  // softmax over instances per head
  Eigen::MatrixXd g_araw(o.a.rows(), nh);
  for (Eigen::Index j = 0; j < nh; ++j) {
    const double inner = o.a.col(j).dot(g_a.col(j));
    g_araw.col(j) = o.a.col(j).cwiseProduct((g_a.col(j).array() - inner).matrix());
  }

  const Eigen::MatrixXd g_u = g_araw.cwiseProduct(tr.v);
  const Eigen::MatrixXd g_v = g_araw.cwiseProduct(tr.u);
  g.w2 = g_u.transpose() * tr.t;
  g.w3 = g_v.transpose() * tr.s;
  const Eigen::MatrixXd g_pre_t = (g_u * params.w2).cwiseProduct((1.0 - tr.t.array().square()).matrix());
  const Eigen::MatrixXd g_pre_s =
      (g_v * params.w3).cwiseProduct((tr.s.array() * (1.0 - tr.s.array())).matrix());
  g.w1 = g_pre_t.transpose() * o.h;
  g.w4 = g_pre_s.transpose() * o.h;
  g_h += g_pre_t * params.w1 + g_pre_s * params.w4;

  for (std::size_t l = params.feature_w.size(); l-- > 0;) {
    const Eigen::MatrixXd g_z = g_h.cwiseProduct((tr.layer_pre[l].array() > 0.0).cast<double>().matrix());
    g.feature_w[l] = g_z.transpose() * tr.layer_in[l];
    g.feature_b[l] = g_z.colwise().sum().transpose();
    if (l > 0) g_h = g_z * params.feature_w[l];
  }
  return res;
}

}  // namespace pcamil

#endif  // PCAMIL_MIL_NET_HPP
