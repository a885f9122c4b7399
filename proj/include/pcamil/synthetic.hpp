#ifndef PCAMIL_SYNTHETIC_HPP
#define PCAMIL_SYNTHETIC_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcamil/dataset.hpp"

namespace pcamil {

/// Synthetic cohort parameters. The side probabilities default to the
/// right-sided fraction of MSI tumors (0.87) and the MSS value that makes the
/// overall right-sided fraction 0.44 at 18% MSI.
struct SynthConfig {
  std::size_t n_patients = 260;
  double msi_fraction = 0.18;
  std::size_t patches_min = 16;
  std::size_t patches_max = 48;
  std::size_t feature_dim = 64;
  std::size_t signal_rank = 4;
  double noise_sigma = 1.2;
  double p_right_given_msi = 0.87;
  double p_right_given_mss = 0.3456;
  std::uint64_t seed = 7;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (n_patients < 2) fail("n_patients must be >= 2");
    if (!(msi_fraction > 0.0 && msi_fraction < 1.0)) fail("msi_fraction must lie in (0,1)");
    if (patches_min < 2 || patches_max < patches_min) fail("need 2 <= patches_min <= patches_max");
    if (feature_dim < 2) fail("feature_dim must be >= 2");
    if (signal_rank < 1 || signal_rank + 1 >= patches_min || signal_rank >= feature_dim) {
      fail("signal_rank must satisfy 1 <= r < min(patches_min - 1, feature_dim)");
    }
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be > 0");
    for (double p : {p_right_given_msi, p_right_given_mss}) {
      if (!(p >= 0.0 && p <= 1.0)) fail("side probabilities must lie in [0,1]");
    }
  }

  std::size_t msi_count() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n_patients) * msi_fraction));
  }
};

/// Orthonormal d x r signal bases, one per class, fixed by the seed alone so
/// train and test splits share them.
struct ClassBases {
  Eigen::MatrixXd msi;
  Eigen::MatrixXd mss;

  const Eigen::MatrixXd& of(Label l) const { return l == Label::MSI ? msi : mss; }
};

inline ClassBases class_bases(const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&] {
    Eigen::MatrixXd g(cfg.feature_dim, cfg.signal_rank);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = gauss(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  };
  ClassBases b;
  b.msi = draw();
  b.mss = draw();
  return b;
}

/// Per-axis latent variances r, r-1, ..., 1 (strictly decreasing).
inline Eigen::VectorXd signal_variances(std::size_t rank) {
  Eigen::VectorXd v(rank);
  for (std::size_t j = 0; j < rank; ++j) v(j) = static_cast<double>(rank - j);
  return v;
}

struct SyntheticPatient {
  PatientRecord record;
  FeatureBag bag;
};

/// Generates a cohort in memory. Each patch is U_c z + noise, with z zero-mean
/// and the class identity carried only by the principal subspace U_c. The
/// patient stream is seeded from (seed, split) so splits are disjoint draws.
inline std::vector<SyntheticPatient> generate_cohort(const SynthConfig& cfg, SplitTag split) {
  cfg.validate();
  const auto bases = class_bases(cfg);
  const auto variances = signal_variances(cfg.signal_rank);
  const std::uint64_t split_salt = split == SplitTag::Train ? 0x9E3779B97F4A7C15ULL : 0xC2B2AE3D27D4EB4FULL;
  std::mt19937_64 rng(cfg.seed ^ split_salt);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> patch_count(cfg.patches_min, cfg.patches_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Label> labels(cfg.n_patients, Label::MSS);
  std::fill_n(labels.begin(), cfg.msi_count(), Label::MSI);
  std::shuffle(labels.begin(), labels.end(), rng);

  const std::string prefix = split == SplitTag::Train ? "TRAIN_" : "TEST_";
  std::vector<SyntheticPatient> out;
  out.reserve(cfg.n_patients);
  for (std::size_t p = 0; p < cfg.n_patients; ++p) {
    SyntheticPatient sp;
    std::ostringstream id;
    id << prefix << std::setw(4) << std::setfill('0') << p;
    sp.record.patient_id = id.str();
    sp.record.label = labels[p];
    const double p_right = labels[p] == Label::MSI ? cfg.p_right_given_msi : cfg.p_right_given_mss;
    sp.record.side = unit(rng) < p_right ? Side::Right : Side::Left;

    const auto& basis = bases.of(labels[p]);
    const std::size_t n = patch_count(rng);
    Eigen::MatrixXd x(n, cfg.feature_dim);
    Eigen::VectorXd z(cfg.signal_rank);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cfg.signal_rank; ++j) z(j) = std::sqrt(variances(j)) * gauss(rng);
      Eigen::VectorXd patch = basis * z;
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) patch(j) += cfg.noise_sigma * gauss(rng);
      x.row(i) = patch.transpose();
    }
    sp.bag.patient_id = sp.record.patient_id;
    sp.bag.features = x.cast<float>();
    out.push_back(std::move(sp));
  }
  return out;
}

/// Writes `<out_dir>/<split>.csv` and one bag file per patient under
/// `<out_dir>/bags/`. Returns the manifest with resolved bag paths.
inline DatasetManifest generate_synthetic(const SynthConfig& cfg, SplitTag split,
                                          const std::filesystem::path& out_dir) {
  auto cohort = generate_cohort(cfg, split);
  DatasetManifest manifest;
  manifest.split_tag = split;
  for (auto& sp : cohort) {
    sp.record.bag_path = out_dir / "bags" / (sp.record.patient_id + ".milb");
    write_feature_bag(sp.bag, sp.record.bag_path);
    manifest.records.push_back(std::move(sp.record));
  }
  write_manifest(manifest, out_dir / (split == SplitTag::Train ? "train.csv" : "test.csv"));
  return manifest;
}

}  // namespace pcamil

#endif  // PCAMIL_SYNTHETIC_HPP
