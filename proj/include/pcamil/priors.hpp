#ifndef PCAMIL_PRIORS_HPP
#define PCAMIL_PRIORS_HPP

#include <numeric>
#include <span>

#include "pcamil/types.hpp"

namespace pcamil {

/// Multiplicative side prior: left-sided tumors get `left_weight`, right or
/// undefined ones get `beta`.
struct PriorConfig {
  double left_weight = 0.1;
  double beta = 1.0;

  void validate() const {
    if (!(left_weight > 0.0 && left_weight <= 1.0)) throw Error(ErrorCode::InvalidConfig, "left_weight must lie in (0,1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidConfig, "beta must lie in (0,1]");
  }
};

/// Patient score as the mean of its patch probabilities.
inline double mean_aggregate(std::span<const double> patch_probs) {
  if (patch_probs.empty()) throw Error(ErrorCode::EmptyBag, "no patch probabilities");
  for (double p : patch_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "patch probability outside [0,1]");
  }
  return std::accumulate(patch_probs.begin(), patch_probs.end(), 0.0) / static_cast<double>(patch_probs.size());
}

inline double side_prior(Side side, const PriorConfig& cfg = {}) {
  return side == Side::Left ? cfg.left_weight : cfg.beta;
}

inline double apply_prior(double p, Side side, const PriorConfig& cfg = {}) { return p * side_prior(side, cfg); }

/// Side-only rule: right-sided (and undefined) tumors are called MSI.
inline Label side_only_classifier(Side side) { return side == Side::Left ? Label::MSS : Label::MSI; }

/// likelihood * prior / evidence, rejecting inputs whose ratio is not a
/// probability.
inline double bayes_posterior(double likelihood, double prior, double evidence) {
  if (!(evidence > 0.0)) throw Error(ErrorCode::ZeroEvidence, "evidence must be > 0");
  const double post = likelihood * prior / evidence;
  if (!(post >= 0.0 && post <= 1.0)) {
    throw Error(ErrorCode::OutOfRangePosterior, "posterior " + std::to_string(post) + " is not in [0,1]");
  }
  return post;
}

}  // namespace pcamil

#endif  // PCAMIL_PRIORS_HPP
