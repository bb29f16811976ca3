#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hampdti/hetgraph/hetgraph.hpp"
#include "hampdti/metapath/metapath.hpp"
#include "hampdti/tensor/io.hpp"
#include "hampdti/tensor/layers.hpp"
#include "hampdti/tensor/optim.hpp"

namespace hampdti::nsgcn {

struct ModelConfig {
  std::size_t dim = 128;  // d', width of the type transforms
  std::vector<std::size_t> hidden = {128};
  std::size_t channels = 4;  // c
  std::size_t length = 3;    // p
  std::size_t steps = 2;     // t
  double gamma = 0.4;
  // Logit init noise; channels would otherwise stay identical forever.
  double selection_init = 0.1;
  bool use_metapaths = true;
  bool use_dti_graph = true;
  // Ablation: a plain GCN with weights shared across node types, interleaving
  // transform and propagation.
  bool entangled = false;
  std::uint64_t seed = 1;

  std::size_t active_channels() const { return use_metapaths ? channels : 0; }
  std::size_t num_graphs() const { return active_channels() + (use_dti_graph ? 1 : 0); }
  // Throws ConfigError on contradictions (nothing to fuse, t, gamma).
  void validate() const;
  std::string describe() const;
};

// Everything the forward pass reads besides the parameters.
struct GraphInputs {
  const HetGraph* graph = nullptr;
  metapath::BlockWindow window;
  Matrix drug_features;     // m x d
  Matrix protein_features;  // n x d
  // Normalized DTI graph D^-1/2 (A + I) D^-1/2 over the m + n nodes.
  std::shared_ptr<const SparseMatrix> dti_norm;
};

GraphInputs make_inputs(const HetGraph& g, const metapath::BlockWindow& w, Matrix xu, Matrix xs, const Matrix& labels,
                        const std::optional<Matrix>& train_mask);

// One propagation step over the bipartite lift of `block` with self-loops and
// symmetric normalization, acting on drug rows hu and protein rows hs.
struct SplitEmbedding {
  tensor::Tensor drugs;
  tensor::Tensor proteins;
};
SplitEmbedding propagate(tensor::Tape& tape, const tensor::Tensor& block, SplitEmbedding h, std::size_t steps);
tensor::Tensor propagate_sparse(tensor::Tape& tape, const std::shared_ptr<const SparseMatrix>& norm, tensor::Tensor x,
                                std::size_t steps);

tensor::Tensor fuse(tensor::Tape& tape, const std::vector<tensor::Tensor>& embeddings, const tensor::Tensor& logits);
tensor::Tensor decode(tensor::Tape& tape, const tensor::Tensor& z, std::size_t drugs);

class Model {
 public:
  Model() = default;
  Model(const ModelConfig& cfg, std::size_t drug_dim, std::size_t protein_dim, std::size_t relations);

  struct Output {
    tensor::Tensor scores;                   // m x n
    tensor::Tensor fusion;                   // graphs x 1
    std::vector<tensor::Tensor> embeddings;  // one (m+n) x d' per graph
  };

  // `override_weights`, when given, replaces the learned selection weights
  // (used to evaluate pruned selections).
  Output forward(tensor::Tape& tape, const GraphInputs& in,
                 const std::vector<metapath::ChannelWeights>* override_weights = nullptr) const;
  tensor::Tensor loss(tensor::Tape& tape, const GraphInputs& in, const Matrix& labels, const Matrix& mask) const;

  std::vector<tensor::Tensor> params() const;
  const ModelConfig& config() const noexcept { return cfg_; }
  const std::vector<metapath::Channel>& channels() const noexcept { return channels_; }
  std::vector<metapath::ChannelWeights> selection_weights() const { return metapath::channel_weights(channels_); }
  std::vector<double> fusion_weights() const;

  tensor::Checkpoint checkpoint() const;
  void load(const tensor::Checkpoint& ckpt);

  // Deep copy of all parameter values, and the reverse.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  tensor::Tensor transform(tensor::Tape& tape, const GraphInputs& in) const;
  tensor::Tensor embed_block(tensor::Tape& tape, const tensor::Tensor& block, const tensor::Tensor& x,
                             std::size_t m) const;

  ModelConfig cfg_;
  std::vector<metapath::Channel> channels_;
  tensor::Mlp drug_mlp_;
  tensor::Mlp protein_mlp_;
  std::vector<tensor::Tensor> gcn_weights_;  // entangled variant only
  tensor::Tensor fusion_logits_;
};

struct TrainConfig {
  std::size_t epochs = 300;
  double lr = 1e-3;
  // Stop after this many epochs without validation improvement; 0 disables.
  std::size_t patience = 50;
};

struct History {
  std::vector<double> loss;
  std::vector<double> val_auc;  // empty without a validation mask
  std::size_t best_epoch = 0;
  double best_val_auc = 0.0;
};

// Adam on all parameters. With a validation mask the parameters of the best
// validation ROC-AUC epoch are restored at the end. A non-finite loss restores
// the last good parameters and throws NumericError.
History train(Model& model, const GraphInputs& in, const Matrix& labels, const Matrix& train_mask,
              const std::optional<Matrix>& val_mask, const TrainConfig& cfg);

Matrix predict(const Model& model, const GraphInputs& in,
               const std::vector<metapath::ChannelWeights>* override_weights = nullptr);

// Scores and labels of the entries where mask != 0, row-major.
void masked_entries(const Matrix& scores, const Matrix& labels, const Matrix& mask, std::vector<double>& s,
                    std::vector<double>& y);

std::uint64_t fnv1a(const std::string& text);

}  // namespace hampdti::nsgcn
