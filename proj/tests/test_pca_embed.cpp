#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pcamil/pca_embed.hpp"

namespace pcamil {
namespace {

FeatureBag random_bag(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<float> g(0.f, 1.f);
  FeatureBag b;
  b.patient_id = "R";
  b.features.resize(n, d);
  for (Eigen::Index i = 0; i < b.features.size(); ++i) b.features.data()[i] = g(rng);
  return b;
}

TEST(PatientEmbedding, DiagonalPoints) {
  FeatureBag b;
  b.features.resize(3, 2);
  b.features << 0, 0, 1, 1, 2, 2;
  const auto e = patient_embedding(b, 2);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e.k_requested, 2u);

  // dense oracle on the 2x2 covariance [[1,1],[1,1]]
  const auto [vals, vecs] = oracle::jacobi_eigen(oracle::dense_covariance(b.features.cast<double>()));
  EXPECT_NEAR(vals(0), 2.0, 1e-12);
  EXPECT_NEAR(e.eigenvalues(0), vals(0), 1e-12);
  EXPECT_NEAR(e.vectors(0, 0), 0.70711, 1e-5);
  EXPECT_NEAR(e.vectors(0, 1), 0.70711, 1e-5);
  EXPECT_NEAR(std::abs(e.vectors.row(0).dot(vecs.col(0))), 1.0, 1e-12);
}

TEST(PatientEmbedding, IdenticalPatchesAreDegenerate) {
  FeatureBag b;
  b.features = RowMatrixF::Constant(5, 7, 3.25f);
  try {
    patient_embedding(b, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBag);
  }
}

TEST(PatientEmbedding, InvalidK) {
  std::mt19937_64 rng(1);
  try {
    patient_embedding(random_bag(rng, 4, 4), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidK);
  }
}

TEST(PatientEmbedding, RankCappedByCentering) {
  std::mt19937_64 rng(2);
  const auto e = patient_embedding(random_bag(rng, 5, 100), 90);
  EXPECT_LE(e.size(), 4u);
  EXPECT_EQ(e.size(), 4u);
}

TEST(PatientEmbedding, MatchesDenseOracle) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nd(2, 20), dd(2, 50);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = nd(rng), d = dd(rng);
    const auto bag = random_bag(rng, n, d);
    const auto e = patient_embedding(bag, static_cast<std::size_t>(d));
    const auto [vals, vecs] = oracle::jacobi_eigen(oracle::dense_covariance(bag.features.cast<double>()));
    ASSERT_EQ(e.size(), static_cast<std::size_t>(std::min(n - 1, d))) << n << "x" << d;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      EXPECT_LE(std::abs(e.eigenvalues(ii) - vals(ii)), 1e-8 * vals(ii));
      EXPECT_NEAR(std::abs(e.vectors.row(ii).dot(vecs.col(ii))), 1.0, 1e-8);
    }
    const Eigen::MatrixXd gram = e.vectors * e.vectors.transpose();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-8);
    for (Eigen::Index i = 1; i < e.eigenvalues.size(); ++i) EXPECT_LE(e.eigenvalues(i), e.eigenvalues(i - 1));
  }
}

TEST(PatientEmbedding, EigenvaluesInvariantUnderRotation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = random_bag(rng, 12, 9).features.cast<double>();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(9, 9)).householderQ();
    const auto a = patient_embedding(x, 9);
    const auto b = patient_embedding(Eigen::MatrixXd(x * q), 9);
    ASSERT_EQ(a.size(), b.size());
    for (Eigen::Index i = 0; i < a.eigenvalues.size(); ++i) {
      EXPECT_LE(std::abs(a.eigenvalues(i) - b.eigenvalues(i)), 1e-8 * a.eigenvalues(i));
    }
  }
}

TEST(PatientEmbedding, SignIsDeterministic) {
  std::mt19937_64 rng(9);
  const auto bag = random_bag(rng, 8, 30);
  const auto a = patient_embedding(bag, 5);
  const auto b = patient_embedding(bag, 5);
  EXPECT_EQ(a.vectors, b.vectors);
  for (Eigen::Index r = 0; r < a.vectors.rows(); ++r) {
    Eigen::Index arg;
    a.vectors.row(r).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.vectors(r, arg), 0.0);
  }
}

TEST(PatientEmbedding, FirstDirectionMaximizesVariance) {
  std::mt19937_64 rng(21);
  auto bag = random_bag(rng, 15, 6);
  for (Eigen::Index i = 0; i < bag.features.rows(); ++i) bag.features(i, 2) *= 4.f;
  const auto e = patient_embedding(bag, 1);
  Eigen::MatrixXd x = bag.features.cast<double>();
  x.rowwise() -= x.colwise().mean();
  auto variance = [&](const Eigen::VectorXd& u) { return (x * u).squaredNorm() / (x.rows() - 1); };
  const double best = variance(e.vectors.row(0).transpose());
  EXPECT_NEAR(best, e.eigenvalues(0), 1e-9 * best);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd u(6);
    for (auto& v : u) v = g(rng);
    EXPECT_GE(best, variance(u.normalized()) - 1e-12);
  }
}

TEST(PatientEmbedding, DirectPathWhenPatchesOutnumberFeatures) {
  std::mt19937_64 rng(4);
  const auto bag = random_bag(rng, 40, 5);
  const auto e = patient_embedding(bag, 10);
  EXPECT_EQ(e.size(), 5u);
  const auto [vals, vecs] = oracle::jacobi_eigen(oracle::dense_covariance(bag.features.cast<double>()));
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(e.eigenvalues(i), vals(i), 1e-10 * vals(0));
}

TEST(InstanceMatrix, SqrtEigenvalueScaling) {
  EigenBasis b;
  b.vectors = Eigen::MatrixXd::Identity(2, 3);
  b.eigenvalues = Eigen::Vector2d(4.0, 9.0);
  EXPECT_EQ(instance_matrix(b, InstanceScaling::Unit), b.vectors);
  const auto s = instance_matrix(b, InstanceScaling::SqrtEigenvalue);
  EXPECT_DOUBLE_EQ(s(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s(1, 1), 3.0);
  EXPECT_EQ(b.truncated(1).size(), 1u);
  EXPECT_EQ(b.truncated(5).size(), 2u);
}

}  // namespace
}  // namespace pcamil
