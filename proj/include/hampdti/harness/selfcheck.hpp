#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hampdti/hetgraph/hetgraph.hpp"
#include "hampdti/matrix.hpp"
#include "hampdti/metapath/metapath.hpp"
#include "hampdti/tensor/optim.hpp"

// Brute-force references used by the `oracle` and `gradcheck` commands.
namespace hampdti::selfcheck {

// Number of walks following `sequence` from each window row to each window
// column, by depth-first enumeration over the relation edge lists.
Matrix walk_counts(const HetGraph& g, const std::vector<std::size_t>& sequence, const metapath::BlockWindow& w);

// Pair counting over every (positive, negative) pair.
double pairwise_auc(const std::vector<double>& scores, const std::vector<double>& labels);
// Precision-weighted recall steps, each threshold counted from scratch.
double stepwise_ap(const std::vector<double>& scores, const std::vector<double>& labels);

struct Summary {
  std::string name;
  std::size_t cases = 0;
  double max_error = 0.0;
  double seconds = 0.0;
};

// One-hot compositions of every schema meta-path of length <= p (identity
// padded) on `graphs` random networks versus walk_counts.
Summary check_compositions(std::size_t graphs, std::size_t p, std::uint64_t seed);
// roc_auc / pr_auc versus the brute-force versions on random score sets.
Summary check_metrics(std::size_t sets, std::size_t max_n, std::uint64_t seed);
// Analytic versus finite-difference gradients of the full stage-2 loss on a
// random network of at most 40 nodes.
tensor::GradCheckResult check_model_gradients(std::uint64_t seed);
// Same for the stage-1 feature loss on a few small molecules.
tensor::GradCheckResult check_feature_gradients(std::uint64_t seed);

}  // namespace hampdti::selfcheck
