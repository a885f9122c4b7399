#ifndef PCAMIL_EXPERIMENT_HPP
#define PCAMIL_EXPERIMENT_HPP

#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "pcamil/config.hpp"
#include "pcamil/dataset.hpp"
#include "pcamil/kfold.hpp"
#include "pcamil/metrics.hpp"
#include "pcamil/stats.hpp"
#include "pcamil/training.hpp"

namespace pcamil {

/// A manifest with its bags loaded and embedded once, up to `k` eigenvectors.
struct PreparedCohort {
  DatasetManifest manifest;
  std::vector<FeatureBag> bags;
  std::vector<EigenBasis> embeddings;

  std::size_t size() const { return manifest.records.size(); }
  std::size_t feature_dim() const { return bags.empty() ? 0 : bags.front().feature_dim(); }
};

inline PreparedCohort prepare_cohort(DatasetManifest manifest, std::size_t k) {
  PreparedCohort c;
  c.bags = load_bags(manifest);
  c.embeddings.reserve(c.bags.size());
  for (const auto& b : c.bags) c.embeddings.push_back(patient_embedding(b, k));
  c.manifest = std::move(manifest);
  return c;
}

/// Per-fold seed derived from the experiment seed (splitmix64 finalizer), so
/// parallel and serial runs agree.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct FoldModels {
  std::size_t fold = 0;
  std::optional<PatchScorer> scorer;
  std::optional<TrainResult> mil;
  MilConfig mil_config;
};

inline std::vector<TrainingBag> training_bags(const PreparedCohort& c, const std::vector<std::size_t>& idx,
                                              std::size_t k, InstanceScaling scaling) {
  std::vector<TrainingBag> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({instance_matrix(c.embeddings[i].truncated(k), scaling), c.manifest.records[i].label});
  return out;
}

/// Trains the requested arms of one fold on the given training indices.
inline FoldModels train_fold_models(const PreparedCohort& train, const std::vector<std::size_t>& idx,
                                    const ExperimentConfig& cfg, std::size_t fold) {
  FoldModels m;
  m.fold = fold;
  const auto seed = derive_seed(cfg.seed, fold);
  if (cfg.needs_baseline()) {
    std::vector<const FeatureBag*> bags;
    std::vector<Label> labels;
    for (auto i : idx) {
      bags.push_back(&train.bags[i]);
      labels.push_back(train.manifest.records[i].label);
    }
    auto sc = cfg.baseline;
    sc.seed = seed ^ 0x5851F42D4C957F2DULL;
    m.scorer = train_patch_scorer(bags, labels, sc);
  }
  m.mil_config = cfg.mil;
  m.mil_config.d_in = train.feature_dim();
  m.mil_config.label_smoothing = cfg.alpha;
  m.mil_config.seed = seed;
  if (cfg.needs_mil()) {
    m.mil = train_fold(training_bags(train, idx, cfg.k_eigenvectors, cfg.mil.scaling), m.mil_config);
  }
  return m;
}

/// Scores the given patients with one trained arm.
inline ScoredCohort score_method(const FoldModels& models, const PreparedCohort& cohort,
                                 const std::vector<std::size_t>& idx, Method method, const ExperimentConfig& cfg) {
  ScoredCohort sc;
  for (auto i : idx) {
    const auto& rec = cohort.manifest.records[i];
    double s = 0.0;
    switch (method) {
      case Method::Baseline:
      case Method::CIBaseline:
        s = models.scorer.value().score_bag(cohort.bags[i]);
        if (method == Method::CIBaseline) s = apply_prior(s, rec.side, cfg.prior);
        break;
      case Method::MILCRC:
      case Method::CIMILCRC: {
        const auto e = instance_matrix(cohort.embeddings[i].truncated(cfg.k_eigenvectors), cfg.mil.scaling);
        s = bag_probability(models.mil.value().params, e).p;
        if (method == Method::CIMILCRC) s = apply_prior(s, rec.side, cfg.prior);
        break;
      }
      case Method::CICRC:
        s = side_only_classifier(rec.side) == Label::MSI ? 1.0 : 0.0;
        break;
    }
    sc.add(rec.patient_id, rec.label, s);
  }
  return sc;
}

struct FoldMetrics {
  std::optional<double> auroc;
  std::optional<double> auprc;
  double f1 = 0.0;
  double kappa = 0.0;
  double accuracy = 0.0;
};

/// One method's evaluation on one fold (fold = -1 for the deterministic
/// side-only arm).
struct FoldReport {
  int fold = 0;
  Method method = Method::Baseline;
  ScoredCohort cohort;
  std::vector<bool> predicted_msi;
  FoldMetrics metrics;
};

inline FoldReport evaluate(int fold, Method method, ScoredCohort cohort, double threshold) {
  FoldReport r;
  r.fold = fold;
  r.method = method;
  const auto br = binary_report(cohort, threshold);
  r.metrics.f1 = br.f1;
  r.metrics.kappa = br.kappa;
  r.metrics.accuracy = br.accuracy;
  if (method != Method::CICRC) {
    r.metrics.auroc = roc_auc(cohort);
    r.metrics.auprc = average_precision(cohort);
  }
  for (double s : cohort.scores) r.predicted_msi.push_back(s >= threshold);
  r.cohort = std::move(cohort);
  return r;
}

inline std::vector<bool> correctness(const FoldReport& r) {
  std::vector<bool> ok(r.cohort.size());
  for (std::size_t i = 0; i < ok.size(); ++i) ok[i] = r.predicted_msi[i] == (r.cohort.labels[i] == Label::MSI);
  return ok;
}

/// Runs `work(fold)` for every fold with at most `threads` workers. Returns
/// per-fold exceptions (null on success).
template <typename Work>
std::vector<std::exception_ptr> run_folds(std::size_t n_folds, std::size_t threads, Work&& work) {
  std::vector<std::exception_ptr> errors(n_folds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < n_folds; f = next++) {
      try {
        work(f);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const auto n_workers = std::min(threads, n_folds);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

/// Cross-validated training on the training cohort only. Fold models are
/// returned in fold order; missing entries mark failed folds.
struct CvTraining {
  Folds folds;
  std::vector<std::optional<FoldModels>> models;
  std::vector<std::exception_ptr> errors;

  std::exception_ptr first_error() const {
    for (const auto& e : errors) {
      if (e) return e;
    }
    return nullptr;
  }
};

inline CvTraining train_cross_validation(const PreparedCohort& train, const ExperimentConfig& cfg) {
  CvTraining cv;
  cv.folds = stratified_kfold(train.manifest.labels(), cfg.n_folds, cfg.seed);
  cv.models.resize(cfg.n_folds);
  cv.errors = run_folds(cfg.n_folds, cfg.threads, [&](std::size_t f) {
    cv.models[f] = train_fold_models(train, training_indices(cv.folds, f), cfg, f);
  });
  return cv;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

inline std::string fold_cell(int fold) { return fold < 0 ? "test" : std::to_string(fold); }

inline int parse_fold_cell(const std::string& s) { return s == "test" ? -1 : std::stoi(s); }

}  // namespace detail

inline constexpr std::string_view kMetricsHeader = "method,fold,auroc,auprc,f1,kappa,accuracy";
inline constexpr std::string_view kPredictionsHeader = "method,fold,patient_id,label,score,predicted";

inline void write_metrics_csv(const std::vector<FoldReport>& reports, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : reports) {
    out << to_string(r.method) << ',' << detail::fold_cell(r.fold) << ',' << detail::opt_num(r.metrics.auroc) << ','
        << detail::opt_num(r.metrics.auprc) << ',' << detail::num(r.metrics.f1) << ',' << detail::num(r.metrics.kappa)
        << ',' << detail::num(r.metrics.accuracy) << '\n';
  }
}

inline void write_predictions_csv(const std::vector<FoldReport>& reports, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << kPredictionsHeader << '\n';
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.cohort.size(); ++i) {
      out << to_string(r.method) << ',' << detail::fold_cell(r.fold) << ',' << r.cohort.patient_ids[i] << ','
          << to_string(r.cohort.labels[i]) << ',' << detail::num(r.cohort.scores[i]) << ','
          << (r.predicted_msi[i] ? "MSI" : "MSS") << '\n';
    }
  }
}

/// Reads report CSVs back. Metric values come from metrics.csv; cohorts and
/// predictions from predictions.csv when present.
inline std::vector<FoldReport> read_reports(const std::filesystem::path& dir) {
  const auto metrics_path = dir / "metrics.csv";
  std::ifstream in(metrics_path);
  if (!in) throw Error(ErrorCode::MissingFile, "no metrics.csv in '" + dir.string() + "'");
  std::vector<FoldReport> reports;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  auto parse_opt = [](const std::string& s) -> std::optional<double> {
    if (s == "NA") return std::nullopt;
    return std::stod(s);
  };
  while (std::getline(in, line)) {
    if (++line_no == 1) {
      if (line != kMetricsHeader) throw Error(ErrorCode::MalformedRow, "metrics.csv line 1: bad header");
      continue;
    }
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 7) throw Error(ErrorCode::MalformedRow, "metrics.csv line " + std::to_string(line_no));
    try {
      FoldReport r;
      r.method = parse_method(cells[0]);
      r.fold = detail::parse_fold_cell(cells[1]);
      r.metrics = {parse_opt(cells[2]), parse_opt(cells[3]), std::stod(cells[4]), std::stod(cells[5]),
                   std::stod(cells[6])};
      index[{cells[0], r.fold}] = reports.size();
      reports.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::MalformedRow, "metrics.csv line " + std::to_string(line_no));
    }
  }

  std::ifstream pin(dir / "predictions.csv");
  if (!pin) return reports;
  line_no = 0;
  while (std::getline(pin, line)) {
    if (++line_no == 1) {
      if (line != kPredictionsHeader) throw Error(ErrorCode::MalformedRow, "predictions.csv line 1: bad header");
      continue;
    }
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 6) throw Error(ErrorCode::MalformedRow, "predictions.csv line " + std::to_string(line_no));
    const auto it = index.find({cells[0], detail::parse_fold_cell(cells[1])});
    if (it == index.end()) continue;
    auto& r = reports[it->second];
    const auto label = parse_label(cells[3]);
    const auto pred = parse_label(cells[5]);
    if (!label || !pred) throw Error(ErrorCode::UnknownLabel, "predictions.csv line " + std::to_string(line_no));
    r.cohort.add(cells[2], *label, std::stod(cells[4]));
    r.predicted_msi.push_back(*pred == Label::MSI);
  }
  return reports;
}

/// Aggregated statistics over fold reports: per-method mean/sd/CI, paired
/// t-tests on AUROC and AUPRC, and per-fold McNemar tests.
inline nlohmann::ordered_json summarize(const std::vector<FoldReport>& reports) {
  using json = nlohmann::ordered_json;
  json out;
  auto per_method = [&](Method m) {
    std::vector<const FoldReport*> rs;
    for (const auto& r : reports) {
      if (r.method == m && r.fold >= 0) rs.push_back(&r);
    }
    std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->fold < b->fold; });
    return rs;
  };
  auto metric_values = [](const std::vector<const FoldReport*>& rs, const std::string& name) {
    std::vector<double> v;
    for (const auto* r : rs) {
      const auto& m = r->metrics;
      if (name == "auroc") v.push_back(m.auroc.value_or(std::nan("")));
      else if (name == "auprc") v.push_back(m.auprc.value_or(std::nan("")));
      else if (name == "f1") v.push_back(m.f1);
      else if (name == "kappa") v.push_back(m.kappa);
      else v.push_back(m.accuracy);
    }
    return v;
  };
  const std::vector<std::string> metric_names{"auroc", "auprc", "f1", "kappa", "accuracy"};

  json methods = json::object();
  for (auto m : kAllMethods) {
    const auto rs = per_method(m);
    if (rs.empty()) continue;
    json entry;
    entry["folds"] = rs.size();
    for (const auto& name : metric_names) {
      const auto v = metric_values(rs, name);
      if (v.size() < 2) {
        entry[name] = nullptr;
        continue;
      }
      // kappa can be negative, so it is not clipped to [0,1]
      const auto s = aggregate_folds(v, name != "kappa");
      entry[name] = {{"mean", s.mean}, {"sd", s.sd}, {"ci95_low", s.ci_low}, {"ci95_high", s.ci_high}};
    }
    methods[std::string(to_string(m))] = entry;
  }
  out["methods"] = methods;

  for (const auto& r : reports) {
    if (r.method == Method::CICRC) {
      out["ci_crc"] = {{"f1", r.metrics.f1}, {"kappa", r.metrics.kappa}, {"accuracy", r.metrics.accuracy}};
    }
  }

  const std::vector<std::pair<Method, Method>> pairs{{Method::Baseline, Method::MILCRC},
                                                     {Method::CIBaseline, Method::CIMILCRC},
                                                     {Method::MILCRC, Method::CIMILCRC}};
  json ttests = json::array();
  json mcnemar = json::array();
  for (const auto& [a, b] : pairs) {
    const auto ra = per_method(a);
    const auto rb = per_method(b);
    if (ra.size() != rb.size() || ra.size() < 2) continue;
    for (const std::string name : {"auroc", "auprc"}) {
      const auto va = metric_values(ra, name);
      const auto vb = metric_values(rb, name);
      const auto t = paired_t_test(vb, va);
      json tj{{"a", std::string(to_string(a))}, {"b", std::string(to_string(b))}, {"metric", name}};
      tj["mean_difference_b_minus_a"] = detail::mean(vb) - detail::mean(va);
      if (std::isfinite(t.statistic)) tj["t"] = t.statistic;
      else tj["t"] = t.statistic > 0 ? "inf" : "-inf";
      tj["p"] = t.p_value;
      ttests.push_back(tj);
    }
    for (std::size_t i = 0; i < ra.size(); ++i) {
      if (ra[i]->predicted_msi.empty() || ra[i]->predicted_msi.size() != rb[i]->predicted_msi.size()) continue;
      const auto mc = mcnemar_test(correctness(*ra[i]), correctness(*rb[i]));
      mcnemar.push_back({{"a", std::string(to_string(a))},
                         {"b", std::string(to_string(b))},
                         {"fold", ra[i]->fold},
                         {"a_correct_only", mc.a_only},
                         {"b_correct_only", mc.b_only},
                         {"exact", mc.exact},
                         {"statistic", mc.statistic},
                         {"p", mc.p_value}});
    }
  }
  out["paired_t_tests"] = ttests;
  out["mcnemar"] = mcnemar;
  return out;
}

/// Fixed notes on conventions, written into every summary.
inline nlohmann::ordered_json report_notes(double threshold) {
  return {{"auprc", "average precision over equal-score blocks"},
          {"ci95", "mean +/- t(0.975, n-1) * sd / sqrt(n) over folds, clipped to [0,1] except kappa"},
          {"threshold", threshold},
          {"undefined_side", "treated as right-sided by the prior and by CI-CRC"},
          {"ci_crc", "deterministic side-only rule evaluated once on the test set; no AUROC/AUPRC"}};
}

inline void write_summary(const nlohmann::ordered_json& extras, const std::vector<FoldReport>& reports,
                          const std::filesystem::path& path) {
  auto j = extras;
  const auto aggregated = summarize(reports);
  for (const auto& [k, v] : aggregated.items()) j[k] = v;
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

/// Empirical side posteriors of the training cohort, grouping undefined with
/// right.
inline nlohmann::ordered_json side_posteriors(const DatasetManifest& m) {
  const auto n = static_cast<double>(m.records.size());
  double msi = 0, right = 0, right_msi = 0;
  for (const auto& r : m.records) {
    const bool is_msi = r.label == Label::MSI;
    const bool is_right = r.side != Side::Left;
    msi += is_msi;
    right += is_right;
    right_msi += is_msi && is_right;
  }
  nlohmann::ordered_json j;
  j["p_msi"] = msi / n;
  j["p_right"] = right / n;
  if (msi > 0) {
    j["p_right_given_msi"] = right_msi / msi;
    if (right > 0) j["p_msi_given_right"] = bayes_posterior(right_msi / msi, msi / n, right / n);
    if (right < n) j["p_msi_given_left"] = bayes_posterior(1.0 - right_msi / msi, msi / n, 1.0 - right / n);
  }
  return j;
}

struct ExperimentResult {
  std::vector<FoldReport> reports;
  std::vector<std::optional<std::size_t>> checkpoint_epochs;
};

/// Full protocol: cross-validated training on the training manifest, then
/// every fold model scored on the external test manifest. Writes
/// metrics.csv, predictions.csv, summary.json and per-fold histories. A
/// failed fold stops the run after flushing completed folds and a FAILED
/// marker.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "FAILED");

  const auto train = prepare_cohort(load_manifest(cfg.train_manifest, SplitTag::Train), cfg.k_eigenvectors);
  auto cv = train_cross_validation(train, cfg);

  // The test manifest is first touched here, after all training is done.
  const auto test = prepare_cohort(load_manifest(cfg.test_manifest, SplitTag::Test), cfg.k_eigenvectors);
  const auto n_test = test.manifest.count(Label::MSI);
  if (n_test == 0 || n_test == test.size()) {
    throw Error(ErrorCode::SingleClassCohort, "test manifest must contain both classes");
  }
  std::vector<std::size_t> all(test.size());
  std::iota(all.begin(), all.end(), 0);

  ExperimentResult res;
  res.checkpoint_epochs.resize(cfg.n_folds);
  nlohmann::ordered_json checkpoints = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < cfg.n_folds; ++f) {
    if (!cv.models[f]) continue;
    const auto& models = *cv.models[f];
    for (auto m : {Method::Baseline, Method::CIBaseline, Method::MILCRC, Method::CIMILCRC}) {
      if (!cfg.uses(m)) continue;
      res.reports.push_back(evaluate(static_cast<int>(f), m, score_method(models, test, all, m, cfg), cfg.threshold));
    }
    if (models.mil) {
      res.checkpoint_epochs[f] = models.mil->checkpoint_epoch;
      write_history_csv(models.mil->history, dir / ("history_fold" + std::to_string(f) + ".csv"));
      nlohmann::ordered_json cj{{"fold", f}};
      if (models.mil->checkpoint_epoch) cj["epoch"] = *models.mil->checkpoint_epoch;
      else cj["epoch"] = nullptr;
      cj["final_epoch_fallback"] = !models.mil->checkpoint_epoch.has_value();
      checkpoints.push_back(cj);
    }
  }
  if (cfg.uses(Method::CICRC)) {
    res.reports.push_back(evaluate(-1, Method::CICRC, score_method(FoldModels{}, test, all, Method::CICRC, cfg),
                                   cfg.threshold));
  }

  write_metrics_csv(res.reports, dir / "metrics.csv");
  write_predictions_csv(res.reports, dir / "predictions.csv");
  nlohmann::ordered_json extras;
  extras["config"] = to_json(cfg);
  extras["train_side_posteriors"] = side_posteriors(train.manifest);
  extras["checkpoints"] = checkpoints;
  extras["notes"] = report_notes(cfg.threshold);
  if (const auto err = cv.first_error()) {
    extras["status"] = "failed";
    write_summary(extras, res.reports, dir / "summary.json");
    auto marker = detail::open_out(dir / "FAILED");
    try {
      std::rethrow_exception(err);
    } catch (const std::exception& e) {
      marker << e.what() << '\n';
    }
    std::rethrow_exception(err);
  }
  extras["status"] = "complete";
  write_summary(extras, res.reports, dir / "summary.json");
  return res;
}

/// Recomputes summary.json from existing metrics.csv / predictions.csv,
/// keeping the non-aggregate sections of an existing summary.
inline nlohmann::ordered_json reaggregate(const std::filesystem::path& dir) {
  const auto reports = read_reports(dir);
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();
  const auto summary_path = dir / "summary.json";
  if (std::ifstream in(summary_path); in) {
    try {
      const auto old = nlohmann::ordered_json::parse(in);
      for (const auto* key : {"config", "train_side_posteriors", "checkpoints", "notes", "status"}) {
        if (old.contains(key)) extras[key] = old.at(key);
      }
    } catch (const nlohmann::json::exception&) {
    }
  }
  write_summary(extras, reports, summary_path);
  std::ifstream in(summary_path);
  return nlohmann::ordered_json::parse(in);
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { KEigenvectors, Alpha, Beta };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "k_eigenvectors" || s == "k") return SweepAxis::KEigenvectors;
  if (s == "alpha") return SweepAxis::Alpha;
  if (s == "beta") return SweepAxis::Beta;
  throw Error(ErrorCode::InvalidConfig, "sweep axis must be k_eigenvectors, alpha or beta");
}

inline constexpr std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::KEigenvectors: return "k_eigenvectors";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Beta: return "beta";
  }
  return "?";
}

struct SweepRow {
  double value = 0.0;
  FoldSummary f1;
  FoldSummary kappa;
};

inline ExperimentConfig with_axis_value(ExperimentConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::KEigenvectors:
      if (!(value >= 1.0) || value != std::floor(value)) throw Error(ErrorCode::InvalidConfig, "k must be a positive integer");
      cfg.k_eigenvectors = static_cast<std::size_t>(value);
      break;
    case SweepAxis::Alpha: cfg.alpha = value; break;
    case SweepAxis::Beta: cfg.prior.beta = value; break;
  }
  cfg.methods = {Method::CIMILCRC};
  cfg.validate();
  return cfg;
}

/// Validation-fold sweep of the CIMIL-CRC arm over one hyperparameter. Uses
/// only the training cohort; mean F1 and kappa are averaged over folds.
inline std::vector<SweepRow> hyperparameter_sweep(const PreparedCohort& train, const ExperimentConfig& base,
                                                  SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double v : values) {
    const auto cfg = with_axis_value(base, axis, v);
    const auto cv = train_cross_validation(train, cfg);
    if (const auto err = cv.first_error()) std::rethrow_exception(err);
    std::vector<double> f1, kappa;
    for (std::size_t f = 0; f < cfg.n_folds; ++f) {
      const auto r = evaluate(static_cast<int>(f), Method::CIMILCRC,
                              score_method(*cv.models[f], train, cv.folds[f], Method::CIMILCRC, cfg), cfg.threshold);
      f1.push_back(r.metrics.f1);
      kappa.push_back(r.metrics.kappa);
    }
    rows.push_back({v, aggregate_folds(f1), aggregate_folds(kappa, false)});
  }
  return rows;
}

inline std::vector<SweepRow> hyperparameter_sweep(const ExperimentConfig& base, SweepAxis axis,
                                                  const std::vector<double>& values) {
  base.validate();
  std::size_t k_max = base.k_eigenvectors;
  if (axis == SweepAxis::KEigenvectors) {
    for (double v : values) k_max = std::max(k_max, static_cast<std::size_t>(std::max(1.0, v)));
  }
  const auto train = prepare_cohort(load_manifest(base.train_manifest, SplitTag::Train), k_max);
  return hyperparameter_sweep(train, base, axis, values);
}

inline void write_sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "axis,value,mean_f1,sd_f1,mean_kappa,sd_kappa\n";
  for (const auto& r : rows) {
    out << to_string(axis) << ',' << detail::num(r.value) << ',' << detail::num(r.f1.mean) << ','
        << detail::num(r.f1.sd) << ',' << detail::num(r.kappa.mean) << ',' << detail::num(r.kappa.sd) << '\n';
  }
}

}  // namespace pcamil

#endif  // PCAMIL_EXPERIMENT_HPP
