#ifndef PCAMIL_PCA_EMBED_HPP
#define PCAMIL_PCA_EMBED_HPP

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "pcamil/binary_io.hpp"
#include "pcamil/types.hpp"

namespace pcamil {

/// A patient's top principal directions: unit-norm eigenvector rows with
/// non-increasing eigenvalues.
struct EigenBasis {
  std::string patient_id;
  Eigen::MatrixXd vectors;  // k' x d
  Eigen::VectorXd eigenvalues;
  std::size_t k_requested = 0;

  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }

  /// Leading `k` rows (all of them when k exceeds the stored count).
  EigenBasis truncated(std::size_t k) const {
    EigenBasis out;
    out.patient_id = patient_id;
    out.k_requested = k;
    const auto keep = static_cast<Eigen::Index>(std::min(k, size()));
    out.vectors = vectors.topRows(keep);
    out.eigenvalues = eigenvalues.head(keep);
    return out;
  }
};

/// Relative to the largest eigenvalue.
inline constexpr double kDefaultRankTolerance = 1e-10;

namespace detail {

/// Flips v so its largest-magnitude entry is positive; ties go to the lowest
/// index.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v(best) < 0.0) v = -v;
}

}  // namespace detail

/// Top-k principal directions of the centered patch cloud (rows of
/// `features`). Uses the N x N Gram matrix when N < d, the d x d covariance
/// otherwise. Eigenpairs at or below `rel_eps_rank` times the largest
/// eigenvalue are dropped, so N patches yield at most N - 1 vectors.
inline EigenBasis patient_embedding(const Eigen::MatrixXd& features, std::size_t k,
                                    double rel_eps_rank = kDefaultRankTolerance, std::string patient_id = {}) {
  if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1");
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n < 2) throw Error(ErrorCode::DegenerateBag, "bag '" + patient_id + "' has fewer than 2 patches");

  Eigen::MatrixXd x = features;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const double denom = static_cast<double>(n - 1);

  Eigen::VectorXd values;
  Eigen::MatrixXd directions;  // columns, ascending eigenvalue order
  const bool gram = n < d;
  if (gram) {
    const Eigen::MatrixXd g = (x * x.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    values = es.eigenvalues();
    directions = es.eigenvectors();
  } else {
    const Eigen::MatrixXd c = (x.transpose() * x) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    values = es.eigenvalues();
    directions = es.eigenvectors();
  }

  const double largest = values.size() > 0 ? values(values.size() - 1) : 0.0;
  if (!(largest > 0.0) || !std::isfinite(largest)) {
    throw Error(ErrorCode::DegenerateBag, "bag '" + patient_id + "' has no variance");
  }
  const double threshold = rel_eps_rank * largest;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = values.size() - 1; i >= 0 && kept.size() < k; --i) {
    if (values(i) > threshold) kept.push_back(i);
  }

  EigenBasis basis;
  basis.patient_id = std::move(patient_id);
  basis.k_requested = k;
  basis.vectors.resize(static_cast<Eigen::Index>(kept.size()), d);
  basis.eigenvalues.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto i = kept[r];
    Eigen::VectorXd v;
    if (gram) {
      // u is an eigenvector of X X^T / (N-1); X^T u spans the matching
      // feature-space direction.
      v = x.transpose() * directions.col(i);
      v /= v.norm();
    } else {
      v = directions.col(i);
    }
    detail::fix_sign(v);
    basis.vectors.row(static_cast<Eigen::Index>(r)) = v.transpose();
    basis.eigenvalues(static_cast<Eigen::Index>(r)) = values(i);
  }
  return basis;
}

inline EigenBasis patient_embedding(const FeatureBag& bag, std::size_t k,
                                    double rel_eps_rank = kDefaultRankTolerance) {
  return patient_embedding(bag.features.cast<double>(), k, rel_eps_rank, bag.patient_id);
}

/// How eigenvector rows are presented to the MIL network.
enum class InstanceScaling { Unit, SqrtEigenvalue };

inline Eigen::MatrixXd instance_matrix(const EigenBasis& basis, InstanceScaling scaling) {
  if (scaling == InstanceScaling::Unit) return basis.vectors;
  return basis.eigenvalues.cwiseSqrt().asDiagonal() * basis.vectors;
}

inline constexpr std::string_view kEigenMagic = "MILE";
inline constexpr std::uint32_t kEigenVersion = 1;

// Layout: "MILE", u32 version, u32 k', u32 d, k' binary64 eigenvalues, then
// k' * d binary32 vector entries row-major.
inline void write_eigen_basis(const EigenBasis& basis, const std::filesystem::path& path) {
  binary::Writer w;
  w.magic(kEigenMagic);
  w.u32(kEigenVersion);
  w.u32(static_cast<std::uint32_t>(basis.vectors.rows()));
  w.u32(static_cast<std::uint32_t>(basis.vectors.cols()));
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) w.f64(basis.eigenvalues(i));
  for (Eigen::Index i = 0; i < basis.vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < basis.vectors.cols(); ++j) w.f32(static_cast<float>(basis.vectors(i, j)));
  }
  w.save(path);
}

inline EigenBasis read_eigen_basis(const std::filesystem::path& path, std::string patient_id = {}) {
  auto r = binary::Reader::open(path);
  r.expect_header(kEigenMagic, kEigenVersion);
  const std::size_t k = r.u32();
  const std::size_t d = r.u32();
  r.require(k * sizeof(double) + k * d * sizeof(float), "payload");
  EigenBasis basis;
  basis.patient_id = patient_id.empty() ? path.stem().string() : std::move(patient_id);
  basis.k_requested = k;
  basis.eigenvalues.resize(static_cast<Eigen::Index>(k));
  basis.vectors.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < k; ++i) basis.eigenvalues(static_cast<Eigen::Index>(i)) = r.f64();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      basis.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.f32();
    }
  }
  if (!basis.vectors.allFinite() || !basis.eigenvalues.allFinite()) {
    throw Error(ErrorCode::NonFiniteEntry, "'" + path.string() + "' contains NaN/Inf");
  }
  return basis;
}

}  // namespace pcamil

#endif  // PCAMIL_PCA_EMBED_HPP
