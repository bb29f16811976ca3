#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hampdti/hetgraph/hetgraph.hpp"
#include "hampdti/random.hpp"
#include "hampdti/tensor/ops.hpp"

namespace hampdti::metapath {

// Selection weights of one soft selection (length K), and of a whole channel
// (p selections).
using SelectionWeights = std::vector<double>;
using ChannelWeights = std::vector<SelectionWeights>;

// Trainable logits e (K x 1); the weights are softmax(e).
struct SoftSelection {
  tensor::Tensor logits;

  SelectionWeights weights() const;
  tensor::Tensor weights(tensor::Tape& tape) const { return tensor::softmax_vector(tape, logits); }
};

struct Channel {
  std::vector<SoftSelection> selections;

  std::size_t length() const noexcept { return selections.size(); }
  ChannelWeights weights() const;
  std::vector<tensor::Tensor> params() const;
};

// c channels of p selections over K relations. Logits start at
// init_scale * N(0,1); 0 gives uniform weights.
std::vector<Channel> make_channels(std::size_t c, std::size_t p, std::size_t k, std::uint64_t seed,
                                   double init_scale = 0.0);
std::vector<ChannelWeights> channel_weights(const std::vector<Channel>& channels);

// Rows [row0, row0 + rows) and columns [col0, col0 + cols) of the global index
// space; for DTI prediction the drug rows and protein columns.
struct BlockWindow {
  std::size_t row0 = 0, rows = 0;
  std::size_t col0 = 0, cols = 0;
};

BlockWindow type_window(const HetGraph& g, const std::string& row_type, const std::string& col_type);

struct MetaPathGraph {
  std::optional<SparseMatrix> full;  // only when asked for
  Matrix block;                      // rows x cols window of full
  SparseMatrix bipartite;            // [[0, block], [block^T, 0]]
};

// sum_k alpha_k R_k
SparseMatrix soft_adjacency(const SelectionWeights& alpha, const HetGraph& g);
SparseMatrix soft_adjacency(const SoftSelection& sel, const HetGraph& g);

// Product of the soft adjacencies, evaluated sparsely from the window's rows.
MetaPathGraph compose_weights(const ChannelWeights& alphas, const HetGraph& g, const BlockWindow& w,
                              bool materialize_full = false);
MetaPathGraph compose_channel(const Channel& ch, const HetGraph& g, const BlockWindow& w,
                              bool materialize_full = false);

// Differentiable block of R^(1) ... R^(p), with each alpha a (K x 1) tensor.
// Gradients flow to every alpha.
tensor::Tensor compose_block(tensor::Tape& tape, const HetGraph& g, const std::vector<tensor::Tensor>& alphas,
                             const BlockWindow& w);

// Bipartite graph of the positive training pairs: entries where labels = 1 and
// mask != 0. The mask is mandatory so test pairs can never leak in.
SparseMatrix dti_graph(const Matrix& labels, const std::optional<Matrix>& train_mask);

struct ComposedGraphs {
  std::vector<MetaPathGraph> channels;
  SparseMatrix dti;
};

ComposedGraphs compose_all(const std::vector<Channel>& channels, const HetGraph& g, const BlockWindow& w,
                           const Matrix& labels, const std::optional<Matrix>& train_mask);

enum class ChannelAggregation { max, sum };

struct MetaPathScore {
  std::vector<std::size_t> sequence;
  std::string description;
  double score = 0.0;
  double relative = 0.0;
};

struct MetaPathScoreReport {
  std::vector<MetaPathScore> rows;
};

// Score of a relation sequence within one channel: the product of the matching
// weights, with a length q < p sequence placed at its best identity-padded
// position.
double sequence_score(const ChannelWeights& ch, const std::vector<std::size_t>& sequence, std::size_t identity_id);

MetaPathScoreReport metapath_scores(const std::vector<ChannelWeights>& channels, const HetGraph& g,
                                    const std::string& from_type, const std::string& to_type,
                                    ChannelAggregation agg = ChannelAggregation::max);

// Sort descending, keep the shortest prefix whose mass reaches keep_mass of the
// total, zero the rest and renormalize.
SelectionWeights prune_weights(const SelectionWeights& alpha, double keep_mass);
std::vector<ChannelWeights> prune_selections(const std::vector<ChannelWeights>& channels, double keep_mass);

}  // namespace hampdti::metapath
