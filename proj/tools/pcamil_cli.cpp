// Command-line front end: synthetic data, embedding cache, single-fold
// training, full experiments, sweeps and report re-aggregation.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "pcamil/pcamil.hpp"

namespace {

using pcamil::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Experiment flags shared by run/train/sweep. Flags given on the command
/// line override values from --config.
struct ExperimentFlags {
  std::string config, train_manifest, test_manifest, output_dir, methods, scaling;
  std::size_t n_folds = 0, k = 0, epochs = 0, d_hidden = 0, d_att = 0, n_heads = 0, layers = 0, baseline_epochs = 0;
  double alpha = 0, beta = 0, left_weight = 0, lr = 0, baseline_lr = 0, threshold = 0;
  std::uint64_t seed = 0;
  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["config"] = app->add_option("--config", config, "JSON file with ExperimentConfig fields");
    opts["train"] = app->add_option("--train-manifest", train_manifest, "training manifest CSV");
    opts["test"] = app->add_option("--test-manifest", test_manifest, "external test manifest CSV");
    opts["out"] = app->add_option("--output-dir", output_dir, "report directory");
    opts["folds"] = app->add_option("--n-folds", n_folds, "cross-validation folds (default 5)");
    opts["k"] = app->add_option("--k-eigenvectors", k, "eigenvectors per patient (default 90)");
    opts["alpha"] = app->add_option("--alpha", alpha, "label smoothing rate (default 0.01)");
    opts["beta"] = app->add_option("--beta", beta, "right/undefined side prior (default 1.0)");
    opts["left"] = app->add_option("--left-weight", left_weight, "left side prior (default 0.1)");
    opts["methods"] = app->add_option("--methods", methods, "comma-separated subset of methods");
    opts["seed"] = app->add_option("--seed", seed, "experiment seed");
    opts["epochs"] = app->add_option("--epochs", epochs, "MIL training epochs (default 10)");
    opts["lr"] = app->add_option("--lr", lr, "MIL learning rate (default 1e-4)");
    opts["d_hidden"] = app->add_option("--d-hidden", d_hidden, "feature MLP width (default 512)");
    opts["d_att"] = app->add_option("--d-att", d_att, "attention hidden width (default 128)");
    opts["n_heads"] = app->add_option("--n-heads", n_heads, "attention heads (default 3)");
    opts["layers"] = app->add_option("--feature-layers", layers, "feature MLP depth (default 1)");
    opts["scaling"] = app->add_option("--instance-scaling", scaling, "unit | sqrt_eigenvalue");
    opts["b_epochs"] = app->add_option("--baseline-epochs", baseline_epochs, "patch scorer epochs");
    opts["b_lr"] = app->add_option("--baseline-lr", baseline_lr, "patch scorer learning rate");
    opts["threshold"] = app->add_option("--threshold", threshold, "decision threshold (default 0.5)");
  }

  bool given(const char* key) const { return opts.at(key)->count() > 0; }

  ExperimentConfig resolve() const {
    ExperimentConfig c = given("config") ? pcamil::load_experiment_config(config) : ExperimentConfig{};
    if (given("train")) c.train_manifest = train_manifest;
    if (given("test")) c.test_manifest = test_manifest;
    if (given("out")) c.output_dir = output_dir;
    if (given("folds")) c.n_folds = n_folds;
    if (given("k")) c.k_eigenvectors = k;
    if (given("alpha")) c.alpha = alpha;
    if (given("beta")) c.prior.beta = beta;
    if (given("left")) c.prior.left_weight = left_weight;
    if (given("seed")) c.seed = seed;
    if (given("epochs")) c.mil.epochs = epochs;
    if (given("lr")) c.mil.lr = lr;
    if (given("d_hidden")) c.mil.d_hidden = d_hidden;
    if (given("d_att")) c.mil.d_att = d_att;
    if (given("n_heads")) c.mil.n_heads = n_heads;
    if (given("layers")) c.mil.feature_layers = layers;
    if (given("b_epochs")) c.baseline.epochs = baseline_epochs;
    if (given("b_lr")) c.baseline.lr = baseline_lr;
    if (given("threshold")) c.threshold = threshold;
    if (given("scaling")) {
      nlohmann::json j{{"mil", {{"instance_scaling", scaling}}}};
      pcamil::apply_json(j, c);
    }
    if (given("methods")) {
      c.methods.clear();
      for (const auto& m : split_list(methods)) c.methods.push_back(pcamil::parse_method(m));
    }
    c.threads = pcamil::threads_from_env();
    c.validate();
    return c;
  }
};

void print_table(const std::vector<pcamil::FoldReport>& reports) {
  std::cout << "method,fold,auroc,auprc,f1,kappa,accuracy\n";
  for (const auto& r : reports) {
    auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("NA"); };
    std::cout << to_string(r.method) << ',' << (r.fold < 0 ? std::string("test") : std::to_string(r.fold)) << ','
              << opt(r.metrics.auroc) << ',' << opt(r.metrics.auprc) << ',' << r.metrics.f1 << ',' << r.metrics.kappa
              << ',' << r.metrics.accuracy << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PCA-embedded gated-attention MIL with a clinical side prior"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic train/test cohort");
  pcamil::SynthConfig scfg;
  std::size_t n_train = 260, n_test = 100;
  std::string synth_out;
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--n-train", n_train, "training patients")->capture_default_str();
  synth->add_option("--n-test", n_test, "test patients")->capture_default_str();
  synth->add_option("--msi-fraction", scfg.msi_fraction)->capture_default_str();
  synth->add_option("--patches-min", scfg.patches_min)->capture_default_str();
  synth->add_option("--patches-max", scfg.patches_max)->capture_default_str();
  synth->add_option("--feature-dim", scfg.feature_dim)->capture_default_str();
  synth->add_option("--signal-rank", scfg.signal_rank)->capture_default_str();
  synth->add_option("--noise-sigma", scfg.noise_sigma)->capture_default_str();
  synth->add_option("--p-right-msi", scfg.p_right_given_msi)->capture_default_str();
  synth->add_option("--p-right-mss", scfg.p_right_given_mss)->capture_default_str();
  synth->add_option("--seed", scfg.seed)->capture_default_str();

  // embed
  auto* embed = app.add_subcommand("embed", "cache per-patient eigenvector bases");
  std::string embed_manifest, embed_out;
  std::size_t embed_k = 90;
  double embed_eps = pcamil::kDefaultRankTolerance;
  embed->add_option("--manifest", embed_manifest)->required();
  embed->add_option("--out-dir", embed_out)->required();
  embed->add_option("--k-eigenvectors,-k", embed_k)->capture_default_str();
  embed->add_option("--eps-rank", embed_eps, "rank tolerance relative to the top eigenvalue")->capture_default_str();

  // train / run / sweep share the experiment flags
  auto* train = app.add_subcommand("train", "train one fold's MIL network (debugging)");
  ExperimentFlags train_flags;
  train_flags.attach(train);
  std::size_t train_fold = 0;
  train->add_option("--fold", train_fold, "fold to hold out")->capture_default_str();

  auto* run = app.add_subcommand("run", "full cross-validated experiment");
  ExperimentFlags run_flags;
  run_flags.attach(run);

  auto* sweep = app.add_subcommand("sweep", "validation sweep over one hyperparameter");
  ExperimentFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::string sweep_axis, sweep_values, sweep_csv;
  sweep->add_option("--axis", sweep_axis, "k_eigenvectors | alpha | beta")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep->add_option("--csv", sweep_csv, "output CSV (default <output-dir>/sweep_<axis>.csv)");

  auto* report = app.add_subcommand("report", "re-aggregate existing fold CSVs into summary.json");
  std::string report_dir;
  report->add_option("--output-dir", report_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*synth) {
      auto c = scfg;
      c.n_patients = n_train;
      pcamil::generate_synthetic(c, pcamil::SplitTag::Train, synth_out);
      c.n_patients = n_test;
      pcamil::generate_synthetic(c, pcamil::SplitTag::Test, synth_out);
      std::cout << "wrote " << synth_out << "/train.csv (" << n_train << ") and " << synth_out << "/test.csv ("
                << n_test << ")\n";
    } else if (*embed) {
      const auto manifest = pcamil::load_manifest(embed_manifest);
      const auto bags = pcamil::load_bags(manifest);
      for (const auto& b : bags) {
        const auto basis = pcamil::patient_embedding(b, embed_k, embed_eps);
        pcamil::write_eigen_basis(basis, std::filesystem::path(embed_out) / (b.patient_id + ".mile"));
      }
      std::cout << "embedded " << bags.size() << " patients into " << embed_out << '\n';
    } else if (*train) {
      auto cfg = train_flags.resolve();
      cfg.methods = {pcamil::Method::MILCRC};
      const auto cohort = pcamil::prepare_cohort(pcamil::load_manifest(cfg.train_manifest), cfg.k_eigenvectors);
      const auto folds = pcamil::stratified_kfold(cohort.manifest.labels(), cfg.n_folds, cfg.seed);
      if (train_fold >= folds.size()) throw pcamil::Error(pcamil::ErrorCode::InvalidConfig, "--fold out of range");
      const auto models = pcamil::train_fold_models(cohort, pcamil::training_indices(folds, train_fold), cfg, train_fold);
      pcamil::write_checkpoint(models.mil_config, models.mil->params, cfg.output_dir / "model.milm");
      pcamil::write_history_csv(models.mil->history, cfg.output_dir / "history.csv");
      std::vector<pcamil::FoldReport> reports;
      for (auto m : {pcamil::Method::MILCRC, pcamil::Method::CIMILCRC}) {
        reports.push_back(pcamil::evaluate(static_cast<int>(train_fold), m,
                                           pcamil::score_method(models, cohort, folds[train_fold], m, cfg),
                                           cfg.threshold));
      }
      std::cout << "validation fold " << train_fold << " ("
                << (models.mil->checkpoint_epoch ? "checkpoint epoch " + std::to_string(*models.mil->checkpoint_epoch)
                                                 : std::string("final epoch, no checkpoint"))
                << ")\n";
      print_table(reports);
    } else if (*run) {
      const auto cfg = run_flags.resolve();
      const auto res = pcamil::run_experiment(cfg);
      print_table(res.reports);
      std::cout << "reports written to " << cfg.output_dir << '\n';
    } else if (*sweep) {
      const auto cfg = sweep_flags.resolve();
      const auto axis = pcamil::parse_sweep_axis(sweep_axis);
      std::vector<double> values;
      for (const auto& v : split_list(sweep_values)) {
        try {
          values.push_back(std::stod(v));
        } catch (const std::logic_error&) {
          throw pcamil::Error(pcamil::ErrorCode::InvalidConfig, "bad sweep value '" + v + "'");
        }
      }
      const auto rows = pcamil::hyperparameter_sweep(cfg, axis, values);
      const std::filesystem::path out =
          sweep_csv.empty() ? cfg.output_dir / ("sweep_" + std::string(to_string(axis)) + ".csv")
                            : std::filesystem::path(sweep_csv);
      pcamil::write_sweep_csv(axis, rows, out);
      std::cout << "value,mean_f1,mean_kappa\n";
      for (const auto& r : rows) std::cout << r.value << ',' << r.f1.mean << ',' << r.kappa.mean << '\n';
      std::cout << "sweep written to " << out << '\n';
    } else if (*report) {
      const auto summary = pcamil::reaggregate(report_dir);
      std::cout << summary.dump(2) << '\n';
    }
  } catch (const pcamil::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.category()) {
      case pcamil::ErrorCategory::Config: return kExitConfig;
      case pcamil::ErrorCategory::Data: return kExitData;
      case pcamil::ErrorCategory::Numerical: return kExitNumerical;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
