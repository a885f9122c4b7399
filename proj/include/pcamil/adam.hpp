#ifndef PCAMIL_ADAM_HPP
#define PCAMIL_ADAM_HPP

#include <cmath>
#include <cstdint>

#include "pcamil/mil_net.hpp"

namespace pcamil {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.7;
  double beta2 = 0.99;
  double eps = 1e-8;

  static AdamHyper from(const MilConfig& cfg) { return {cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps}; }
};

/// One bias-corrected Adam update of a single tensor. `t` is the step number
/// after incrementing (t >= 1).
inline void adam_update(Eigen::MatrixXd& theta, Eigen::MatrixXd& m, Eigen::MatrixXd& v, const Eigen::MatrixXd& g,
                        std::int64_t t, const AdamHyper& h) {
  if (theta.rows() != g.rows() || theta.cols() != g.cols() || m.rows() != g.rows() || m.cols() != g.cols() ||
      v.rows() != g.rows() || v.cols() != g.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "adam: parameter, gradient and moment shapes differ");
  }
  m = h.beta1 * m + (1.0 - h.beta1) * g;
  v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  theta.array() -= h.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + h.eps);
}

struct AdamState {
  MilParams m;
  MilParams v;
  std::int64_t t = 0;

  static AdamState for_params(const MilParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

inline void adam_step(AdamState& state, MilParams& params, const MilParams& grads, const AdamHyper& h) {
  auto theta = params.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  const auto g = grads.tensors();
  if (theta.size() != g.size() || m.size() != g.size() || v.size() != g.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam: tensor count mismatch");
  }
  ++state.t;
  for (std::size_t i = 0; i < theta.size(); ++i) adam_update(*theta[i], *m[i], *v[i], *g[i], state.t, h);
}

}  // namespace pcamil

#endif  // PCAMIL_ADAM_HPP
