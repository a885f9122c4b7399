#ifndef PCAMIL_PATCH_SCORER_HPP
#define PCAMIL_PATCH_SCORER_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "pcamil/adam.hpp"
#include "pcamil/priors.hpp"

namespace pcamil {

/// Logistic model over raw patch features; the baseline's patch classifier.
struct PatchScorer {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double score(const Eigen::Ref<const Eigen::RowVectorXd>& patch) const {
    return detail::open_unit(detail::sigmoid(patch.dot(weights) + bias));
  }

  Eigen::VectorXd score_all(const Eigen::MatrixXd& patches) const {
    Eigen::VectorXd z = patches * weights;
    return z.unaryExpr([this](double v) { return detail::open_unit(detail::sigmoid(v + bias)); });
  }

  /// Patient score: mean of the bag's patch probabilities.
  double score_bag(const FeatureBag& bag) const {
    const Eigen::VectorXd probs = score_all(bag.features.cast<double>());
    return mean_aggregate(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
  }
};

struct PatchScorerConfig {
  std::size_t epochs = 200;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

/// Full-batch Adam on the class-weighted patch BCE. `patch_labels` are
/// inherited from the owning patient; class weights use patient-level
/// frequencies when supplied.
inline PatchScorer train_patch_scorer(const Eigen::MatrixXd& patches, const std::vector<Label>& patch_labels,
                                      const PatchScorerConfig& cfg, const ClassWeights& weights) {
  if (patches.rows() != static_cast<Eigen::Index>(patch_labels.size())) {
    throw Error(ErrorCode::LengthMismatch, "one label per patch required");
  }
  const bool has_msi = std::find(patch_labels.begin(), patch_labels.end(), Label::MSI) != patch_labels.end();
  const bool has_mss = std::find(patch_labels.begin(), patch_labels.end(), Label::MSS) != patch_labels.end();
  if (!has_msi || !has_mss) throw Error(ErrorCode::SingleClassTrainingSet, "patch scorer needs both classes");

  const auto n = patches.rows();
  const auto d = patches.cols();
  Eigen::VectorXd target(n), sample_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    target(i) = as_target(patch_labels[static_cast<std::size_t>(i)]);
    sample_w(i) = weights.of(patch_labels[static_cast<std::size_t>(i)]);
  }
  const double norm = sample_w.sum();

  std::mt19937_64 rng(cfg.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> init(-bound, bound);
  Eigen::MatrixXd w(d, 1), b = Eigen::MatrixXd::Zero(1, 1);
  for (Eigen::Index j = 0; j < d; ++j) w(j, 0) = init(rng);

  Eigen::MatrixXd mw = Eigen::MatrixXd::Zero(d, 1), vw = mw, mb = b, vb = b;
  const AdamHyper hyper{cfg.lr, 0.9, 0.999, 1e-8};
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const Eigen::VectorXd z = (patches * w).col(0).array() + b(0, 0);
    const Eigen::VectorXd p = z.unaryExpr([](double v) { return detail::sigmoid(v); });
    const Eigen::VectorXd resid = sample_w.cwiseProduct(p - target) / norm;
    const Eigen::MatrixXd gw = patches.transpose() * resid;
    Eigen::MatrixXd gb(1, 1);
    gb(0, 0) = resid.sum();
    adam_update(w, mw, vw, gw, static_cast<std::int64_t>(epoch), hyper);
    adam_update(b, mb, vb, gb, static_cast<std::int64_t>(epoch), hyper);
  }
  return {w.col(0), b(0, 0)};
}

/// Convenience: stacks every patch of the given bags with its patient label.
inline PatchScorer train_patch_scorer(const std::vector<const FeatureBag*>& bags, const std::vector<Label>& labels,
                                      const PatchScorerConfig& cfg) {
  if (bags.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "one label per bag required");
  Eigen::Index rows = 0;
  for (const auto* b : bags) rows += b->features.rows();
  if (bags.empty()) throw Error(ErrorCode::SingleClassTrainingSet, "no training bags");
  Eigen::MatrixXd patches(rows, bags.front()->features.cols());
  std::vector<Label> patch_labels;
  patch_labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    const auto& f = bags[i]->features;
    patches.middleRows(at, f.rows()) = f.cast<double>();
    at += f.rows();
    patch_labels.insert(patch_labels.end(), static_cast<std::size_t>(f.rows()), labels[i]);
  }
  return train_patch_scorer(patches, patch_labels, cfg, ClassWeights::from_labels(labels));
}

}  // namespace pcamil

#endif  // PCAMIL_PATCH_SCORER_HPP
