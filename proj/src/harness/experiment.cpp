#include "hampdti/harness/experiment.hpp"

#include <cmath>
#include <cstring>
#include <future>

#include "hampdti/error.hpp"
#include "hampdti/molfeat/features.hpp"
#include "hampdti/molfeat/smiles.hpp"

namespace hampdti {

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  model.seed = s;
  pretrain.seed = s;
  split.seed = s;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (!(prune_keep_mass >= 0.0 && prune_keep_mass <= 1.0)) throw ConfigError("prune_keep_mass must lie in [0, 1]");
  if (split.kind == SplitKind::cv || split.kind == SplitKind::jaccard) {
    if (split.folds < 2) throw ConfigError("cross-validation needs at least two folds");
  }
  if (!(split.holdout_fraction >= 0.0 && split.holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in [0, 1)");
  }
  if (!(split.val_fraction >= 0.0 && split.val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0, 1)");
  if (fold_threads == 0) throw ConfigError("fold_threads must be positive");
}

namespace {

void hash_bytes(std::uint64_t& h, const void* p, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_matrix(std::uint64_t& h, const Matrix& m) {
  hash_bytes(h, &m.rows, sizeof m.rows);
  hash_bytes(h, &m.cols, sizeof m.cols);
  hash_bytes(h, m.data.data(), m.data.size() * sizeof(double));
}

std::pair<std::vector<double>, std::vector<double>> scores_for(const Matrix& s, const std::vector<LabeledPair>& pairs) {
  std::vector<double> x, y;
  for (const auto& p : pairs) {
    x.push_back(s(p.drug, p.protein));
    y.push_back(p.label);
  }
  return {x, y};
}

bool both_classes(const std::vector<LabeledPair>& pairs) {
  bool pos = false, neg = false;
  for (const auto& p : pairs) (p.label == 1.0 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

FoldInputs build_fold_inputs(const Dataset& ds, const Fold& fold) {
  const std::size_t m = ds.num_drugs(), n = ds.num_proteins();
  FoldInputs in;
  in.train_mask = pair_mask(fold.train, m, n);
  in.val_mask = pair_mask(fold.val, m, n);
  std::vector<LabeledPair> visible = fold.train;
  visible.insert(visible.end(), fold.val.begin(), fold.val.end());
  in.visible_labels = pair_labels(visible, m, n);
  in.graph = ds.graph_with_dti(pair_labels(fold.train, m, n));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_matrix(h, in.train_mask);
  hash_matrix(h, in.val_mask);
  hash_matrix(h, in.visible_labels);
  const auto& t = in.graph.node_table();
  hash_matrix(h, in.graph.relation(in.graph.relation_id(ds.dti_relation))
                     .matrix.dense_block(0, m, t.offset(1), t.offset(1) + n));
  in.fingerprint = h;
  return in;
}

FeatureSet fold_features(const Dataset& ds, const FoldInputs& in, const ExperimentConfig& cfg, std::size_t fold) {
  const std::size_t m = ds.num_drugs(), n = ds.num_proteins();
  if (cfg.no_features) {
    Rng rng = Rng::derive(cfg.seed, 0x4e46 + fold);
    FeatureSet f{Matrix(m, cfg.model.dim), Matrix(n, cfg.model.dim)};
    for (double& v : f.drugs.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : f.proteins.data) v = rng.uniform(-1.0, 1.0);
    return f;
  }
  if (!ds.has_features()) throw ConfigError("dataset has no SMILES/sequence tables; use no_features");
  std::vector<molfeat::PreparedMolecule> mols;
  for (std::size_t i = 0; i < m; ++i) {
    try {
      mols.push_back(molfeat::prepare_molecule(molfeat::parse_smiles(ds.smiles[i])));
    } catch (const ParseError& e) {
      throw IngestError("drug '" + ds.ids[0][i] + "': " + e.what());
    }
  }
  molfeat::PretrainConfig pc = cfg.pretrain;
  pc.seed = Rng::mix(cfg.pretrain.seed ^ (0x5054 + fold));
  auto res = molfeat::pretrain_features(mols, molfeat::ctd_matrix(ds.sequences), in.visible_labels, in.train_mask, pc);
  return {std::move(res.drug_features), std::move(res.protein_features)};
}

FoldResult run_fold(const Dataset& ds, const Fold& fold, std::size_t index, const ExperimentConfig& cfg) {
  const FoldInputs in = build_fold_inputs(ds, fold);
  FeatureSet feats = fold_features(ds, in, cfg, index);
  const HetGraph& g = in.graph;
  const auto w = metapath::type_window(g, ds.types[0], ds.types[1]);
  const nsgcn::GraphInputs gi =
      nsgcn::make_inputs(g, w, std::move(feats.drugs), std::move(feats.proteins), in.visible_labels, in.train_mask);
  nsgcn::ModelConfig mc = cfg.model;
  mc.seed = Rng::mix(cfg.model.seed ^ (0x4d44 + index));
  nsgcn::Model model(mc, gi.drug_features.cols, gi.protein_features.cols, g.num_relations());
  const std::optional<Matrix> val = both_classes(fold.val) ? std::optional(in.val_mask) : std::nullopt;
  const auto hist = nsgcn::train(model, gi, in.visible_labels, in.train_mask, val, cfg.train);

  FoldResult r;
  r.fold = index;
  r.train_pairs = fold.train.size();
  r.val_pairs = fold.val.size();
  r.test_pairs = fold.test.size();
  r.epochs_run = hist.loss.size();
  r.best_epoch = hist.best_epoch;
  r.final_loss = hist.loss.empty() ? 0.0 : hist.loss.back();
  r.fingerprint = in.fingerprint;
  r.fusion_weights = model.fusion_weights();
  r.selections = model.selection_weights();

  const Matrix scores = nsgcn::predict(model, gi);
  const auto [s, y] = scores_for(scores, fold.test);
  r.metrics = compute_metrics(s, y);
  for (const auto& p : fold.test) r.predictions.push_back({p.drug, p.protein, scores(p.drug, p.protein), p.label, index});

  if (!r.selections.empty()) {
    if (cfg.prune_keep_mass > 0.0) {
      const auto pruned = metapath::prune_selections(r.selections, cfg.prune_keep_mass);
      const auto [ps, py] = scores_for(nsgcn::predict(model, gi, &pruned), fold.test);
      r.pruned = compute_metrics(ps, py);
    }
    r.metapaths = metapath::metapath_scores(r.selections, g, ds.types[0], ds.types[1], cfg.aggregation);
  }
  if (cfg.keep_checkpoints) r.checkpoint = model.checkpoint();
  return r;
}

MetricRow mean_of(const std::vector<MetricRow>& rows) {
  MetricRow m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.roc_auc += r.roc_auc;
    m.pr_auc += r.pr_auc;
    m.f1 += r.f1;
    m.accuracy += r.accuracy;
    m.recall += r.recall;
    m.specificity += r.specificity;
    m.precision += r.precision;
  }
  const double k = static_cast<double>(rows.size());
  for (double* v : {&m.roc_auc, &m.pr_auc, &m.f1, &m.accuracy, &m.recall, &m.specificity, &m.precision}) *v /= k;
  return m;
}

MetricRow stddev_of(const std::vector<MetricRow>& rows) {
  MetricRow s;
  if (rows.size() < 2) return s;
  const MetricRow m = mean_of(rows);
  auto acc = [&](double MetricRow::*f) {
    double t = 0.0;
    for (const auto& r : rows) t += (r.*f - m.*f) * (r.*f - m.*f);
    s.*f = std::sqrt(t / static_cast<double>(rows.size() - 1));
  };
  for (auto f : {&MetricRow::roc_auc, &MetricRow::pr_auc, &MetricRow::f1, &MetricRow::accuracy, &MetricRow::recall,
                 &MetricRow::specificity, &MetricRow::precision})
    acc(f);
  return s;
}

EvalReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& name) {
  cfg.validate();
  return run_experiment(ds, make_splits(ds, cfg.split), cfg, name);
}

EvalReport run_experiment(const Dataset& ds, const SplitPlan& plan, const ExperimentConfig& cfg,
                          const std::string& name) {
  cfg.validate();
  std::size_t count = plan.folds.size();
  if (cfg.max_folds) count = std::min(count, cfg.max_folds);
  EvalReport rep;
  rep.name = name;
  rep.config = cfg;
  rep.folds.resize(count);
  auto run_one = [&](std::size_t k) {
    try {
      rep.folds[k] = run_fold(ds, plan.folds[k], k, cfg);
    } catch (const std::exception& e) {
      throw Error("fold " + std::to_string(k) + ": " + e.what());
    }
  };
  if (cfg.fold_threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) run_one(k);
  } else {
    for (std::size_t start = 0; start < count; start += cfg.fold_threads) {
      std::vector<std::future<void>> jobs;
      for (std::size_t k = start; k < std::min(count, start + cfg.fold_threads); ++k)
        jobs.push_back(std::async(std::launch::async, run_one, k));
      for (auto& j : jobs) j.get();
    }
  }

  std::vector<MetricRow> rows, pruned;
  for (const auto& f : rep.folds) {
    rows.push_back(f.metrics);
    if (f.pruned) pruned.push_back(*f.pruned);
  }
  rep.mean = mean_of(rows);
  rep.stddev = stddev_of(rows);
  if (!pruned.empty()) rep.pruned_mean = mean_of(pruned);
  if (!rep.folds.empty() && rep.folds.front().metapaths) {
    metapath::MetaPathScoreReport avg = *rep.folds.front().metapaths;
    for (auto& row : avg.rows) row.score = row.relative = 0.0;
    for (const auto& f : rep.folds)
      for (std::size_t i = 0; i < avg.rows.size(); ++i) {
        avg.rows[i].score += f.metapaths->rows[i].score / static_cast<double>(rep.folds.size());
        avg.rows[i].relative += f.metapaths->rows[i].relative / static_cast<double>(rep.folds.size());
      }
    rep.metapaths = std::move(avg);
  }
  return rep;
}

}  // namespace hampdti
