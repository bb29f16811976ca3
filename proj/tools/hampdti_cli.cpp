#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hampdti/error.hpp"
#include "hampdti/harness/dataset.hpp"
#include "hampdti/harness/experiment.hpp"
#include "hampdti/harness/report.hpp"
#include "hampdti/harness/selfcheck.hpp"
#include "hampdti/harness/splits.hpp"
#include "hampdti/molfeat/encoders.hpp"
#include "hampdti/molfeat/features.hpp"
#include "hampdti/molfeat/smiles.hpp"
#include "hampdti/tensor/io.hpp"

using namespace hampdti;
namespace fs = std::filesystem;

namespace {

// Flags shared by the commands that train something.
struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
  std::string data;
  bool no_features = false, no_metapaths = false, no_dti_graph = false, entangled = false;
  std::optional<std::size_t> folds, max_folds, threads, epochs;
  std::string split;
  std::string jaccard_relation;

  void add(CLI::App* app, bool needs_data = true) {
    app->add_option("--seed", seed, "Seed for every random stream");
    app->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--out", out, "Output directory");
    auto* d = app->add_option("--data", data, "Dataset manifest (see `synth` for the format)");
    if (needs_data) d->required()->check(CLI::ExistingFile);
  }
  void add_model_flags(CLI::App* app) {
    app->add_flag("--no-features", no_features, "Random node attributes instead of stage-1 features");
    app->add_flag("--no-metapaths", no_metapaths, "Drop the meta-path channels (DTI graph only)");
    app->add_flag("--no-dti-graph", no_dti_graph, "Drop the DTI graph from fusion");
    app->add_flag("--entangled-gcn", entangled, "Shared-transform GCN instead of node-type specific layers");
    app->add_option("--folds", folds, "Number of CV folds");
    app->add_option("--max-folds", max_folds, "Run only the first N folds");
    app->add_option("--threads", threads, "Folds trained concurrently");
    app->add_option("--epochs", epochs, "Stage-2 epochs");
  }

  ExperimentConfig resolve(const Dataset* ds) const {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_config(config, cfg);
    if (seed) cfg.apply_seed(*seed);
    if (no_features) cfg.no_features = true;
    if (no_metapaths) cfg.model.use_metapaths = false;
    if (no_dti_graph) cfg.model.use_dti_graph = false;
    if (entangled) cfg.model.entangled = true;
    if (folds) cfg.split.folds = *folds;
    if (max_folds) cfg.max_folds = *max_folds;
    if (threads) cfg.fold_threads = *threads;
    if (epochs) cfg.train.epochs = *epochs;
    if (!split.empty()) cfg.split.kind = parse_split_kind(split);
    if (!jaccard_relation.empty()) cfg.split.jaccard_relation = jaccard_relation;
    if (ds && !cfg.no_features && !ds->has_features()) {
      std::cerr << "note: dataset has no SMILES/sequence tables; using random node features\n";
      cfg.no_features = true;
    }
    cfg.validate();
    return cfg;
  }
};

Dataset load(const Common& c) {
  Dataset ds = ingest(c.data);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
  return ds;
}

void print_summary(const EvalReport& rep) {
  std::printf("%s: %zu fold(s)\n", rep.name.c_str(), rep.folds.size());
  for (const auto& f : rep.folds)
    std::printf("  fold %zu  roc_auc %.4f  pr_auc %.4f  (best epoch %zu of %zu)\n", f.fold, f.metrics.roc_auc,
                f.metrics.pr_auc, f.best_epoch, f.epochs_run);
  std::printf("  mean     roc_auc %.4f +- %.4f  pr_auc %.4f +- %.4f  f1 %.4f  acc %.4f\n", rep.mean.roc_auc,
              rep.stddev.roc_auc, rep.mean.pr_auc, rep.stddev.pr_auc, rep.mean.f1, rep.mean.accuracy);
  if (rep.pruned_mean)
    std::printf("  pruned   roc_auc %.4f  pr_auc %.4f\n", rep.pruned_mean->roc_auc, rep.pruned_mean->pr_auc);
}

void print_metapaths(const metapath::MetaPathScoreReport& rep) {
  std::printf("%-58s %12s %9s\n", "meta-path", "score", "relative");
  for (const auto& r : rep.rows) std::printf("%-58s %12.6g %8.2f%%\n", r.description.c_str(), r.score, 100 * r.relative);
}

int run_eval(const Common& c, SplitKind kind, const std::string& name, bool keep_model = false) {
  const Dataset ds = load(c);
  Common cc = c;
  if (cc.split.empty() || kind != SplitKind::cv) cc.split = to_string(kind);
  ExperimentConfig cfg = cc.resolve(&ds);
  cfg.keep_checkpoints = keep_model;
  const EvalReport rep = run_experiment(ds, cfg, name);
  write_report(c.out, rep, ds);
  if (keep_model && !rep.folds.empty() && rep.folds[0].checkpoint)
    tensor::save_checkpoint(fs::path(c.out) / "model.ckpt", *rep.folds[0].checkpoint);
  print_summary(rep);
  std::printf("wrote %s\n", (fs::path(c.out) / "report.json").c_str());
  return 0;
}

int cmd_ingest(const Common& c) {
  const Dataset ds = load(c);
  const std::string s = ds.stats();
  std::cout << s;
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "stats.txt") << s;
  }
  return 0;
}

int cmd_pretrain(const Common& c) {
  const Dataset ds = load(c);
  if (!ds.has_features()) throw ConfigError("pretrain needs SMILES and sequence tables");
  const ExperimentConfig cfg = c.resolve(&ds);
  // train on everything outside the independent hold-out
  SplitConfig sc = cfg.split;
  sc.kind = SplitKind::independent;
  const SplitPlan plan = make_splits(ds, sc);
  const std::size_t m = ds.num_drugs(), n = ds.num_proteins();
  std::vector<molfeat::PreparedMolecule> mols;
  for (const auto& s : ds.smiles) mols.push_back(molfeat::prepare_molecule(molfeat::parse_smiles(s)));
  const auto res = molfeat::pretrain_features(mols, molfeat::ctd_matrix(ds.sequences), pair_labels(plan.cv_set, m, n),
                                              pair_mask(plan.cv_set, m, n), cfg.pretrain);
  const fs::path out(c.out);
  fs::create_directories(out);
  tensor::write_matrix(out / "drug_features.txt", res.drug_features);
  tensor::write_matrix(out / "protein_features.txt", res.protein_features);
  tensor::save_checkpoint(out / "pretrain.ckpt", res.checkpoint);
  std::ofstream loss(out / "pretrain_loss.csv");
  loss << "epoch,loss\n";
  for (std::size_t e = 0; e < res.loss_history.size(); ++e)
    loss << e << "," << tensor::format_double(res.loss_history[e]) << "\n";
  std::printf("stage-1 loss %.6g -> %.6g over %zu epochs; features %zux%zu and %zux%zu written to %s\n",
              res.loss_history.front(), res.loss_history.back(), res.loss_history.size(), res.drug_features.rows,
              res.drug_features.cols, res.protein_features.rows, res.protein_features.cols, c.out.c_str());
  return 0;
}

int cmd_ablate(const Common& c) {
  const Dataset ds = load(c);
  const ExperimentConfig base = c.resolve(&ds);
  struct Variant {
    std::string name;
    void (*apply)(ExperimentConfig&);
  };
  std::vector<Variant> variants = {
      {"full", [](ExperimentConfig&) {}},
      {"no-features", [](ExperimentConfig& e) { e.no_features = true; }},
      {"no-metapaths", [](ExperimentConfig& e) { e.model.use_metapaths = false; }},
      {"no-dti-graph", [](ExperimentConfig& e) { e.model.use_dti_graph = false; }},
      {"entangled-gcn", [](ExperimentConfig& e) { e.model.entangled = true; }},
  };
  std::vector<EvalReport> reps;
  for (const auto& v : variants) {
    if (v.name == "no-features" && base.no_features) continue;  // already the base
    ExperimentConfig cfg = base;
    v.apply(cfg);
    cfg.validate();
    reps.push_back(run_experiment(ds, cfg, v.name));
    write_report(fs::path(c.out) / v.name, reps.back(), ds);
    print_summary(reps.back());
  }
  write_comparison(c.out, reps);
  std::printf("wrote %s\n", (fs::path(c.out) / "comparison.csv").c_str());
  return 0;
}

int cmd_metapaths(const Common& c, const std::string& checkpoint) {
  const Dataset ds = load(c);
  const ExperimentConfig cfg = c.resolve(&ds);
  metapath::MetaPathScoreReport rep;
  if (!checkpoint.empty()) {
    const tensor::Checkpoint ck = tensor::load_checkpoint(checkpoint);
    std::vector<metapath::ChannelWeights> channels;
    for (std::size_t ch = 0;; ++ch) {
      metapath::ChannelWeights w;
      for (std::size_t s = 0;; ++s) {
        const std::string name = "channel" + std::to_string(ch) + ".sel" + std::to_string(s);
        if (!ck.contains(name)) break;
        const Matrix& logits = ck.get(name);
        double mx = -INFINITY, z = 0.0;
        for (double v : logits.data) mx = std::max(mx, v);
        metapath::SelectionWeights a;
        for (double v : logits.data) z += std::exp(v - mx);
        for (double v : logits.data) a.push_back(std::exp(v - mx) / z);
        w.push_back(std::move(a));
      }
      if (w.empty()) break;
      channels.push_back(std::move(w));
    }
    if (channels.empty()) throw ConfigError(checkpoint + " holds no meta-path channels");
    rep = metapath::metapath_scores(channels, ds.graph(), ds.types[0], ds.types[1], cfg.aggregation);
  } else {
    if (!cfg.model.use_metapaths) throw ConfigError("meta-path channels are disabled");
    const EvalReport r = run_experiment(ds, cfg, "metapaths");
    rep = *r.metapaths;
  }
  fs::create_directories(c.out);
  write_metapaths_csv(fs::path(c.out) / "metapaths.csv", rep);
  print_metapaths(rep);
  return 0;
}

int cmd_gradcheck(const Common& c) {
  const std::uint64_t seed = c.seed.value_or(1);
  const auto model = selfcheck::check_model_gradients(seed);
  const auto feats = selfcheck::check_feature_gradients(seed);
  std::printf("stage-2 model: %zu coordinates, max relative error %.3e (worst %s)\n", model.coords_checked,
              model.max_rel_error, model.worst_param.c_str());
  std::printf("stage-1 features: %zu coordinates, max relative error %.3e (worst %s)\n", feats.coords_checked,
              feats.max_rel_error, feats.worst_param.c_str());
  // an all-zero gradient would pass trivially
  auto live = [](const tensor::GradCheckResult& r) { return r.worst_analytic != 0.0 || r.worst_numeric != 0.0; };
  const bool ok = model.max_rel_error < 1e-4 && feats.max_rel_error < 1e-4 && live(model) && live(feats);
  std::printf("%s\n", ok ? "ok" : "FAILED: tolerance 1e-4");
  return ok ? 0 : 1;
}

int cmd_oracle(const Common& c, std::size_t graphs, std::size_t sets) {
  const std::uint64_t seed = c.seed.value_or(1);
  const auto comp = selfcheck::check_compositions(graphs, 3, seed);
  const auto met = selfcheck::check_metrics(sets, 200, seed);
  bool ok = true;
  for (const auto& [s, tol] : {std::pair{comp, 1e-9}, std::pair{met, 1e-12}}) {
    const bool pass = s.max_error <= tol;
    ok = ok && pass;
    std::printf("%-56s %6zu cases  max error %.3e  %.2fs  %s\n", s.name.c_str(), s.cases, s.max_error, s.seconds,
                pass ? "ok" : "FAILED");
  }
  return ok ? 0 : 1;
}

int cmd_synth(const Common& c, SynthConfig sc) {
  if (c.seed) sc.seed = *c.seed;
  const Dataset ds = make_synthetic(sc);
  write_dataset(ds, c.out);
  std::cout << ds.stats();
  std::printf("wrote %s\n", (fs::path(c.out) / "manifest.tsv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous-network drug-target interaction prediction with learned meta-paths"};
  app.require_subcommand(1);

  Common ingest_c, pre_c, train_c, cv_c, ind_c, uniq_c, abl_c, mp_c, gc_c, or_c, syn_c;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a dataset manifest and print its statistics");
  ingest_c.out.clear();
  ingest_c.add(ingest_cmd);
  auto* pre_cmd = app.add_subcommand("pretrain", "Stage 1: learn drug and protein features");
  pre_c.add(pre_cmd);
  auto* train_cmd = app.add_subcommand("train", "Train on the CV set, evaluate on the hold-out, save the model");
  train_c.add(train_cmd);
  train_c.add_model_flags(train_cmd);
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validation");
  cv_c.add(cv_cmd);
  cv_c.add_model_flags(cv_cmd);
  cv_cmd->add_option("--split", cv_c.split, "cv or jaccard")->check(CLI::IsMember({"cv", "jaccard"}));
  cv_cmd->add_option("--jaccard-relation", cv_c.jaccard_relation, "Relation compared by the jaccard split");
  auto* ind_cmd = app.add_subcommand("independent", "Train on the CV set, test on the independent hold-out");
  ind_c.add(ind_cmd);
  ind_c.add_model_flags(ind_cmd);
  auto* uniq_cmd = app.add_subcommand("unique", "Test on interactions of single-partner drugs or proteins");
  uniq_c.add(uniq_cmd);
  uniq_c.add_model_flags(uniq_cmd);
  auto* abl_cmd = app.add_subcommand("ablate", "Cross-validate the full model and each ablation");
  abl_c.add(abl_cmd);
  abl_c.add_model_flags(abl_cmd);
  auto* mp_cmd = app.add_subcommand("metapaths", "Meta-path scores from a checkpoint or a fresh CV run");
  mp_c.add(mp_cmd);
  mp_c.add_model_flags(mp_cmd);
  std::string checkpoint;
  mp_cmd->add_option("--checkpoint", checkpoint, "model.ckpt written by `train`")->check(CLI::ExistingFile);
  auto* gc_cmd = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients on small models");
  gc_c.add(gc_cmd, false);
  auto* or_cmd = app.add_subcommand("oracle", "Path-count and metric oracles");
  or_c.add(or_cmd, false);
  std::size_t graphs = 100, sets = 1000;
  or_cmd->add_option("--graphs", graphs, "Random networks for the path-count check");
  or_cmd->add_option("--sets", sets, "Random score sets for the metric check");
  auto* syn_cmd = app.add_subcommand("synth", "Write a synthetic dataset with a planted meta-path");
  syn_c.add(syn_cmd, false);
  SynthConfig sc;
  syn_cmd->add_option("--drugs", sc.drugs);
  syn_cmd->add_option("--proteins", sc.proteins);
  syn_cmd->add_option("--diseases", sc.diseases);
  syn_cmd->add_option("--side-effects", sc.side_effects);
  syn_cmd->add_option("--disease-drugs", sc.disease_drugs);
  syn_cmd->add_option("--disease-proteins", sc.disease_proteins);
  syn_cmd->add_option("--planted", sc.planted, "Relation names of the planted path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ingest_cmd) return cmd_ingest(ingest_c);
    if (*pre_cmd) return cmd_pretrain(pre_c);
    if (*train_cmd) return run_eval(train_c, SplitKind::independent, "train", true);
    if (*cv_cmd) return run_eval(cv_c, cv_c.split == "jaccard" ? SplitKind::jaccard : SplitKind::cv, "cv");
    if (*ind_cmd) return run_eval(ind_c, SplitKind::independent, "independent");
    if (*uniq_cmd) return run_eval(uniq_c, SplitKind::unique, "unique");
    if (*abl_cmd) return cmd_ablate(abl_c);
    if (*mp_cmd) return cmd_metapaths(mp_c, checkpoint);
    if (*gc_cmd) return cmd_gradcheck(gc_c);
    if (*or_cmd) return cmd_oracle(or_c, graphs, sets);
    if (*syn_cmd) return cmd_synth(syn_c, sc);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const IngestError& e) {
    std::cerr << "error: ingest: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
