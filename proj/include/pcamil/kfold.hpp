#ifndef PCAMIL_KFOLD_HPP
#define PCAMIL_KFOLD_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "pcamil/types.hpp"

namespace pcamil {

using Folds = std::vector<std::vector<std::size_t>>;

/// Per-class seeded shuffle, then one round-robin pass that continues across
/// classes (MSI first), so per-class counts and fold sizes each differ by at
/// most one. Fold index lists are sorted.
inline Folds stratified_kfold(const std::vector<Label>& labels, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw Error(ErrorCode::TooFewFolds, "need at least 2 folds");
  std::vector<std::size_t> msi, mss;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == Label::MSI ? msi : mss).push_back(i);
  if (msi.size() < n_folds || mss.size() < n_folds) {
    throw Error(ErrorCode::TooFewPerClass, std::to_string(n_folds) + " folds need that many patients of each class (MSI " +
                                               std::to_string(msi.size()) + ", MSS " + std::to_string(mss.size()) + ")");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(msi.begin(), msi.end(), rng);
  std::shuffle(mss.begin(), mss.end(), rng);

  Folds folds(n_folds);
  std::size_t slot = 0;
  for (const auto* group : {&msi, &mss}) {
    for (const auto idx : *group) {
      folds[slot].push_back(idx);
      slot = (slot + 1) % n_folds;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

/// All indices outside fold `f`.
inline std::vector<std::size_t> training_indices(const Folds& folds, std::size_t f) {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pcamil

#endif  // PCAMIL_KFOLD_HPP
