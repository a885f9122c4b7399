#ifndef PCAMIL_TRAINING_HPP
#define PCAMIL_TRAINING_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "pcamil/adam.hpp"
#include "pcamil/binary_io.hpp"

namespace pcamil {

/// One training bag: the instance matrix (eigenvector rows) and its label.
struct TrainingBag {
  Eigen::MatrixXd instances;
  Label label = Label::MSS;
};

/// Save parameters after an epoch when training-set accuracy on the MSI
/// class and overall both exceed the thresholds (at decision threshold 0.5).
struct CheckpointRule {
  bool enabled = true;
  double min_acc_overall = 0.95;
  double min_acc_msi = 0.95;
  double threshold = 0.5;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean over the epoch's optimizer steps
  double acc_overall = 0.0;
  double acc_msi = 0.0;
};

struct TrainResult {
  MilParams params;
  std::vector<EpochRecord> history;
  std::optional<std::size_t> checkpoint_epoch;  // empty: final-epoch fallback
};

struct TrainAccuracy {
  double overall = 0.0;
  double msi = 0.0;
};

inline TrainAccuracy training_accuracy(const MilParams& params, const std::vector<TrainingBag>& bags,
                                       double threshold) {
  std::size_t correct = 0, msi_total = 0, msi_correct = 0;
  for (const auto& b : bags) {
    const bool predicted_msi = bag_probability(params, b.instances).p >= threshold;
    const bool ok = predicted_msi == (b.label == Label::MSI);
    correct += ok;
    if (b.label == Label::MSI) {
      ++msi_total;
      msi_correct += ok;
    }
  }
  TrainAccuracy acc;
  acc.overall = bags.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(bags.size());
  acc.msi = msi_total == 0 ? 0.0 : static_cast<double>(msi_correct) / static_cast<double>(msi_total);
  return acc;
}

/// Trains one fold's network: seeded shuffle per epoch, one Adam step per
/// patient. Returns the latest qualifying checkpoint, or the final-epoch
/// parameters when the rule never fires.
inline TrainResult train_fold(const std::vector<TrainingBag>& bags, const MilConfig& cfg,
                              const CheckpointRule& rule = {}) {
  cfg.validate();
  if (bags.empty()) throw Error(ErrorCode::SingleClassTrainingSet, "empty training set");
  std::vector<Label> labels;
  for (const auto& b : bags) labels.push_back(b.label);
  const auto weights = ClassWeights::from_labels(labels);

  TrainResult res;
  res.params = init_params(cfg);
  auto state = AdamState::for_params(res.params);
  const auto hyper = AdamHyper::from(cfg);
  std::optional<MilParams> checkpoint;

  std::mt19937_64 order_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<std::size_t> order(bags.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (const auto idx : order) {
      const auto g = gradients(res.params, bags[idx].instances, bags[idx].label, cfg.label_smoothing, weights);
      if (!std::isfinite(g.loss) || !g.grad.all_finite()) {
        throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", bag " +
                                                  std::to_string(idx) + ": loss " + std::to_string(g.loss));
      }
      loss_sum += g.loss;
      adam_step(state, res.params, g.grad, hyper);
    }
    const auto acc = training_accuracy(res.params, bags, rule.threshold);
    res.history.push_back({epoch, loss_sum / static_cast<double>(bags.size()), acc.overall, acc.msi});
    if (rule.enabled && acc.overall > rule.min_acc_overall && acc.msi > rule.min_acc_msi) {
      checkpoint = res.params;
      res.checkpoint_epoch = epoch;
    }
  }
  if (checkpoint) res.params = std::move(*checkpoint);
  return res;
}

inline void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << "epoch,loss,acc_overall,acc_msi\n" << std::setprecision(17);
  for (const auto& h : history) out << h.epoch << ',' << h.loss << ',' << h.acc_overall << ',' << h.acc_msi << '\n';
}

inline constexpr std::string_view kModelMagic = "MILM";
inline constexpr std::uint32_t kModelVersion = 1;

// Layout: "MILM", u32 version, config (u32 d_in, d_hidden, d_att, n_heads,
// feature_layers, epochs, scaling; f64 lr, beta1, beta2, adam_eps,
// label_smoothing; u64 seed), u32 tensor count, then per tensor u32 rows,
// u32 cols and rows*cols binary64 values row-major.
inline void write_checkpoint(const MilConfig& cfg, const MilParams& params, const std::filesystem::path& path) {
  binary::Writer w;
  w.magic(kModelMagic);
  w.u32(kModelVersion);
  for (auto v : {cfg.d_in, cfg.d_hidden, cfg.d_att, cfg.n_heads, cfg.feature_layers, cfg.epochs}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(cfg.scaling == InstanceScaling::Unit ? 0u : 1u);
  for (auto v : {cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.label_smoothing}) w.f64(v);
  w.u64(cfg.seed);
  const auto tensors = params.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    w.u32(static_cast<std::uint32_t>(t->rows()));
    w.u32(static_cast<std::uint32_t>(t->cols()));
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      for (Eigen::Index j = 0; j < t->cols(); ++j) w.f64((*t)(i, j));
    }
  }
  w.save(path);
}

struct Checkpoint {
  MilConfig config;
  MilParams params;
};

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  auto r = binary::Reader::open(path);
  r.expect_header(kModelMagic, kModelVersion);
  Checkpoint ck;
  auto& c = ck.config;
  for (auto* v : {&c.d_in, &c.d_hidden, &c.d_att, &c.n_heads, &c.feature_layers, &c.epochs}) *v = r.u32();
  c.scaling = r.u32() == 0 ? InstanceScaling::Unit : InstanceScaling::SqrtEigenvalue;
  for (auto* v : {&c.lr, &c.beta1, &c.beta2, &c.adam_eps, &c.label_smoothing}) *v = r.f64();
  c.seed = r.u64();
  c.validate();
  ck.params = init_params(c);
  auto tensors = ck.params.tensors();
  if (r.u32() != tensors.size()) throw Error(ErrorCode::ShapeMismatch, "'" + path.string() + "': tensor count");
  for (auto* t : tensors) {
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (rows != t->rows() || cols != t->cols()) {
      throw Error(ErrorCode::ShapeMismatch, "'" + path.string() + "': tensor shape differs from config");
    }
    r.require(static_cast<std::size_t>(rows) * cols * sizeof(double), "tensor payload");
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      for (Eigen::Index j = 0; j < t->cols(); ++j) (*t)(i, j) = r.f64();
    }
  }
  if (!ck.params.all_finite()) throw Error(ErrorCode::NonFiniteEntry, "'" + path.string() + "' has NaN/Inf");
  return ck;
}

}  // namespace pcamil

#endif  // PCAMIL_TRAINING_HPP
