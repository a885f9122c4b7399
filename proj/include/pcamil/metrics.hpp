#ifndef PCAMIL_METRICS_HPP
#define PCAMIL_METRICS_HPP

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "pcamil/types.hpp"

namespace pcamil {

/// Parallel per-patient labels and scores. MSI is the positive class.
struct ScoredCohort {
  std::vector<std::string> patient_ids;
  std::vector<Label> labels;
  std::vector<double> scores;

  std::size_t size() const { return labels.size(); }

  void add(std::string id, Label l, double s) {
    patient_ids.push_back(std::move(id));
    labels.push_back(l);
    scores.push_back(s);
  }

  void check() const {
    if (labels.size() != scores.size() || (!patient_ids.empty() && patient_ids.size() != labels.size())) {
      throw Error(ErrorCode::LengthMismatch, "cohort columns differ in length");
    }
  }

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::MSI));
  }
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

namespace detail {

/// Indices ordered by descending score; stable so ties keep input order.
inline std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

/// Mann-Whitney AUROC: share of (positive, negative) pairs ranked correctly,
/// ties counted as half.
inline double roc_auc(const ScoredCohort& c) {
  c.check();
  const auto pos = c.positives();
  const auto neg = c.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClassCohort, "AUROC needs both classes");
  const auto order = detail::descending_order(c.scores);
  // Walk tie blocks from the top: each negative in a block beats the
  // positives below it and ties with positives inside it.
  double wins = 0.0;
  std::size_t neg_seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, p_block = 0, n_block = 0;
    while (j < order.size() && c.scores[order[j]] == c.scores[order[i]]) {
      (c.labels[order[j]] == Label::MSI ? p_block : n_block)++;
      ++j;
    }
    const double neg_below = static_cast<double>(neg - neg_seen - n_block);
    wins += static_cast<double>(p_block) * (neg_below + 0.5 * static_cast<double>(n_block));
    neg_seen += n_block;
    i = j;
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

/// Step-wise average precision over equal-score blocks.
inline double average_precision(const ScoredCohort& c) {
  c.check();
  const auto pos = c.positives();
  if (pos == 0) throw Error(ErrorCode::NoPositives, "average precision needs at least one positive");
  const auto order = detail::descending_order(c.scores);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, p_block = 0;
    while (j < order.size() && c.scores[order[j]] == c.scores[order[i]]) {
      p_block += c.labels[order[j]] == Label::MSI;
      ++j;
    }
    tp += p_block;
    seen += j - i;
    if (p_block > 0) {
      const double d_recall = static_cast<double>(p_block) / static_cast<double>(pos);
      ap += d_recall * static_cast<double>(tp) / static_cast<double>(seen);
    }
    i = j;
  }
  return ap;
}

inline ConfusionCounts confusion(const ScoredCohort& c, double threshold) {
  c.check();
  ConfusionCounts cc;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const bool pred = c.scores[i] >= threshold;
    const bool truth = c.labels[i] == Label::MSI;
    if (pred && truth) ++cc.tp;
    else if (pred) ++cc.fp;
    else if (truth) ++cc.fn;
    else ++cc.tn;
  }
  return cc;
}

struct BinaryReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
};

inline BinaryReport binary_report(const ConfusionCounts& cc) {
  BinaryReport r;
  r.counts = cc;
  const auto n = static_cast<double>(cc.total());
  if (n == 0.0) return r;
  const double tp = static_cast<double>(cc.tp), fp = static_cast<double>(cc.fp);
  const double fn = static_cast<double>(cc.fn), tn = static_cast<double>(cc.tn);
  r.accuracy = (tp + tn) / n;
  const double f1_den = 2.0 * tp + fp + fn;
  r.f1 = f1_den == 0.0 ? 0.0 : 2.0 * tp / f1_den;
  const double p_o = r.accuracy;
  const double p_e = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
  if (p_e == 1.0) {
    r.kappa = p_o == 1.0 ? 1.0 : 0.0;
  } else {
    r.kappa = (p_o - p_e) / (1.0 - p_e);
  }
  return r;
}

/// Predicts MSI iff score >= threshold.
inline BinaryReport binary_report(const ScoredCohort& c, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidConfig, "threshold outside [0,1]");
  return binary_report(confusion(c, threshold));
}

}  // namespace pcamil

#endif  // PCAMIL_METRICS_HPP
