#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hampdti/harness/dataset.hpp"
#include "hampdti/harness/metrics.hpp"
#include "hampdti/harness/splits.hpp"
#include "hampdti/metapath/metapath.hpp"
#include "hampdti/molfeat/encoders.hpp"
#include "hampdti/nsgcn/nsgcn.hpp"
#include "hampdti/tensor/io.hpp"

namespace hampdti {

struct ExperimentConfig {
  nsgcn::ModelConfig model;
  nsgcn::TrainConfig train;
  molfeat::PretrainConfig pretrain;
  SplitConfig split;
  // Random fixed node attributes instead of learned drug/protein features.
  bool no_features = false;
  // Run only the first max_folds folds; 0 runs all.
  std::size_t max_folds = 0;
  // Also evaluate with pruned selections; 0 turns it off.
  double prune_keep_mass = 0.99;
  metapath::ChannelAggregation aggregation = metapath::ChannelAggregation::max;
  // Folds trained concurrently.
  std::size_t fold_threads = 1;
  // Keep each fold's trained parameters in its FoldResult.
  bool keep_checkpoints = false;
  std::uint64_t seed = 1;

  // Pushes `seed` into every component seed.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

// Everything a fold's training sees. Built from the fold's train and
// validation pairs only; test labels never enter.
struct FoldInputs {
  HetGraph graph;
  Matrix train_mask;
  Matrix val_mask;
  Matrix visible_labels;  // labels of train + val pairs, 0 elsewhere
  // FNV-1a over masks, visible labels and the graph's interaction edges.
  std::uint64_t fingerprint = 0;
};

FoldInputs build_fold_inputs(const Dataset& ds, const Fold& fold);

struct Prediction {
  std::size_t drug;
  std::size_t protein;
  double score;
  double label;
  std::size_t fold;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_pairs = 0, val_pairs = 0, test_pairs = 0;
  MetricRow metrics;
  std::optional<MetricRow> pruned;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double final_loss = 0.0;
  std::vector<double> fusion_weights;
  std::vector<metapath::ChannelWeights> selections;
  std::optional<metapath::MetaPathScoreReport> metapaths;
  std::vector<Prediction> predictions;
  std::uint64_t fingerprint = 0;
  std::optional<tensor::Checkpoint> checkpoint;
};

struct EvalReport {
  std::string name;
  ExperimentConfig config;
  std::vector<FoldResult> folds;
  MetricRow mean;
  MetricRow stddev;
  std::optional<MetricRow> pruned_mean;
  // Relative scores averaged over folds.
  std::optional<metapath::MetaPathScoreReport> metapaths;
};

// Features for the model: stage-1 pretraining on the fold's training pairs,
// or seeded uniform(-1, 1) vectors of width model.dim under no_features.
struct FeatureSet {
  Matrix drugs;
  Matrix proteins;
};
FeatureSet fold_features(const Dataset& ds, const FoldInputs& in, const ExperimentConfig& cfg, std::size_t fold);

FoldResult run_fold(const Dataset& ds, const Fold& fold, std::size_t index, const ExperimentConfig& cfg);
EvalReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& name = "experiment");
EvalReport run_experiment(const Dataset& ds, const SplitPlan& plan, const ExperimentConfig& cfg,
                          const std::string& name = "experiment");

MetricRow mean_of(const std::vector<MetricRow>& rows);
MetricRow stddev_of(const std::vector<MetricRow>& rows);

}  // namespace hampdti
