#include <numeric>

#include "doctest.h"
#include "hampdti/error.hpp"
#include "hampdti/metapath/metapath.hpp"
#include "hampdti/tensor/optim.hpp"
#include "test_util.hpp"

using namespace hampdti;
using namespace hampdti::metapath;
using namespace testutil;

namespace {

SelectionWeights one_hot(std::size_t k, std::size_t at) {
  SelectionWeights w(k, 0.0);
  w[at] = 1.0;
  return w;
}

Matrix dense_soft(const HetGraph& g, const SelectionWeights& a) {
  Matrix out(g.num_nodes(), g.num_nodes());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Matrix r = g.relation(k).matrix.to_dense();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += a[k] * r.data[i];
  }
  return out;
}

Matrix dense_block(const HetGraph& g, const ChannelWeights& ch, const BlockWindow& w) {
  Matrix prod = dense_soft(g, ch[0]);
  for (std::size_t i = 1; i < ch.size(); ++i) prod = naive_matmul(prod, dense_soft(g, ch[i]));
  Matrix b(w.rows, w.cols);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) b(i, j) = prod(w.row0 + i, w.col0 + j);
  return b;
}

ChannelWeights random_channel(std::size_t p, std::size_t k, Rng& rng) {
  ChannelWeights ch;
  for (std::size_t i = 0; i < p; ++i) {
    Matrix e = random_dense(k, 1, rng, -2, 2);
    tensor::Tape t;
    ch.push_back(tensor::softmax_vector(t, tensor::Tensor::constant(e)).value().data);
  }
  return ch;
}

}  // namespace

TEST_CASE("soft_adjacency: limit, uniform and dense oracle") {
  Rng rng(1);
  const HetGraph g = dtinet_like(4, 3, 2, 2, 0.4, rng);
  const std::size_t k = g.num_relations();
  for (std::size_t r = 0; r < k; ++r) {
    SoftSelection sel;
    Matrix e(k, 1);
    e(r, 0) = 40.0;
    sel.logits = tensor::Tensor::parameter(e, "e");
    CHECK(max_abs_diff(soft_adjacency(sel, g).to_dense(), g.relation(r).matrix.to_dense()) < 1e-12);
  }
  const auto a = random_channel(1, k, rng)[0];
  CHECK(max_abs_diff(soft_adjacency(a, g).to_dense(), dense_soft(g, a)) < 1e-15);
}

TEST_CASE("soft_adjacency: two single-edge relations at uniform weight") {
  NodeTypeTable t({"a", "b"}, {2, 2});
  const HetGraph g = build_relation_set(t, {{"a-a", "a", "a", {{0, 1}}}, {"b-b", "b", "b", {{2, 3}}}});
  const SelectionWeights uni(g.num_relations(), 1.0 / static_cast<double>(g.num_relations()));
  const SparseMatrix s = soft_adjacency(uni, g);
  CHECK(s.at(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(s.at(2, 3) == doctest::Approx(1.0 / 3));
  CHECK(s.at(0, 0) == doctest::Approx(1.0 / 3));  // identity
}

TEST_CASE("compose: identity channel gives an empty block") {
  Rng rng(2);
  const HetGraph g = dtinet_like(4, 3, 2, 2, 0.5, rng);
  const auto w = type_window(g, "drug", "protein");
  const std::size_t id = g.identity_id(), k = g.num_relations();
  const auto mg = compose_weights({one_hot(k, id), one_hot(k, id), one_hot(k, id)}, g, w, true);
  CHECK(frobenius_norm(mg.block) == 0.0);
  CHECK(mg.full->to_dense() == Matrix::identity(g.num_nodes()));
}

TEST_CASE("compose: one-hot paths match the path-count oracle") {
  Rng rng(3);
  const HetGraph g = dtinet_like(5, 4, 3, 2, 0.5, rng);
  const auto w = type_window(g, "drug", "protein");
  const std::size_t k = g.num_relations();
  const std::size_t dd = g.relation_id("drug-drug"), dp = g.relation_id("drug-protein"), id = g.identity_id();
  const auto mg = compose_weights({one_hot(k, dd), one_hot(k, dp), one_hot(k, id)}, g, w);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j)
      CHECK(mg.block(i, j) == path_count_oracle(g, {dd, dp}, w.row0 + i, w.col0 + j));
  // identity padding anywhere gives the same graph
  const auto front = compose_weights({one_hot(k, id), one_hot(k, dd), one_hot(k, dp)}, g, w);
  const auto mid = compose_weights({one_hot(k, dd), one_hot(k, id), one_hot(k, dp)}, g, w);
  const auto direct = compose_weights({one_hot(k, dd), one_hot(k, dp)}, g, w);
  CHECK(front.block == mg.block);
  CHECK(mid.block == mg.block);
  CHECK(direct.block == mg.block);
}

TEST_CASE("compose: every length-3 one-hot sequence vs oracle") {
  Rng rng(4);
  const HetGraph g = dtinet_like(3, 3, 2, 2, 0.5, rng);
  const auto w = type_window(g, "drug", "protein");
  const std::size_t k = g.num_relations();
  for (const auto& seq : enumerate_schema_metapaths(g, "drug", "protein", 3)) {
    ChannelWeights ch;
    for (std::size_t r : seq) ch.push_back(one_hot(k, r));
    const auto mg = compose_weights(ch, g, w);
    for (std::size_t i = 0; i < w.rows; ++i)
      for (std::size_t j = 0; j < w.cols; ++j)
        CHECK(mg.block(i, j) == path_count_oracle(g, seq, w.row0 + i, w.col0 + j));
  }
}

TEST_CASE("compose: soft weights vs dense oracle, bipartite shape") {
  Rng rng(5);
  const HetGraph g = dtinet_like(4, 3, 3, 2, 0.4, rng);
  const auto w = type_window(g, "drug", "protein");
  const auto ch = random_channel(3, g.num_relations(), rng);
  const auto mg = compose_weights(ch, g, w, true);
  CHECK(max_abs_diff(mg.block, dense_block(g, ch, w)) < 1e-12);
  CHECK(max_abs_diff(mg.full->dense_block(w.row0, w.row0 + w.rows, w.col0, w.col0 + w.cols), mg.block) < 1e-12);
  CHECK(mg.bipartite.n_rows() == w.rows + w.cols);
  CHECK(mg.bipartite.is_symmetric());
  for (double v : mg.block.data) CHECK(v >= 0.0);
}

TEST_CASE("compose: multilinear in each selection") {
  Rng rng(6);
  const HetGraph g = dtinet_like(4, 3, 2, 2, 0.5, rng);
  const auto w = type_window(g, "drug", "protein");
  auto ch = random_channel(3, g.num_relations(), rng);
  const auto base = compose_weights(ch, g, w);
  for (double& a : ch[1]) a *= 2.5;
  const auto scaled = compose_weights(ch, g, w);
  for (std::size_t i = 0; i < base.block.size(); ++i)
    CHECK(scaled.block.data[i] == doctest::Approx(2.5 * base.block.data[i]).epsilon(1e-12));
}

TEST_CASE("compose_block: forward matches and gradients check") {
  Rng rng(7);
  const HetGraph g = dtinet_like(4, 3, 2, 2, 0.5, rng);
  const auto w = type_window(g, "drug", "protein");
  auto channels = make_channels(1, 3, g.num_relations(), 9, 1.0);
  const Matrix probe = random_dense(w.rows, w.cols, rng);
  auto forward = [&](tensor::Tape& tape) {
    std::vector<tensor::Tensor> alphas;
    for (const auto& s : channels[0].selections) alphas.push_back(s.weights(tape));
    const auto b = compose_block(tape, g, alphas, w);
    return tensor::sum(tape, tensor::mul(tape, b, tensor::Tensor::constant(probe)));
  };
  tensor::Tape tape;
  std::vector<tensor::Tensor> alphas;
  for (const auto& s : channels[0].selections) alphas.push_back(s.weights(tape));
  CHECK(max_abs_diff(compose_block(tape, g, alphas, w).value(), compose_channel(channels[0], g, w).block) < 1e-12);
  const auto res = tensor::grad_check(forward, channels[0].params(), 1e-5);
  CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("compose_all: DTI graph needs a mask and uses training positives only") {
  Rng rng(8);
  const HetGraph g = dtinet_like(3, 2, 2, 2, 0.5, rng);
  const auto w = type_window(g, "drug", "protein");
  const auto channels = make_channels(1, 2, g.num_relations(), 1);
  Matrix y(3, 2);
  y(0, 0) = y(1, 1) = y(2, 0) = 1.0;
  CHECK_THROWS_AS(compose_all(channels, g, w, y, std::nullopt), ConfigError);
  const auto empty = compose_all(channels, g, w, y, Matrix(3, 2));
  CHECK(empty.dti.nnz() == 0);
  Matrix mask(3, 2, 1.0);
  mask(2, 0) = 0.0;
  const auto c = compose_all(channels, g, w, y, mask);
  CHECK(c.dti.nnz() == 4);
  CHECK(c.dti.at(0, 3) == 1.0);
  CHECK(c.dti.at(2, 3) == 0.0);
  // uniform single channel against the dense chain
  REQUIRE(c.channels.size() == 1);
  CHECK(max_abs_diff(c.channels[0].block, dense_block(g, channel_weights(channels)[0], w)) < 1e-12);
}

TEST_CASE("defaults: four channels of length three") {
  Rng rng(9);
  const HetGraph g = dtinet_like(3, 2, 2, 2, 0.5, rng);
  const auto channels = make_channels(4, 3, g.num_relations(), 1);
  CHECK(channels.size() == 4);
  for (const auto& ch : channels) {
    CHECK(ch.length() == 3);
    for (const auto& a : ch.weights()) {
      CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (double x : a) CHECK(x > 0.0);
    }
  }
}

TEST_CASE("scores: uniform weights") {
  Rng rng(10);
  const HetGraph g = dtinet_like(3, 3, 2, 2, 0.5, rng);
  REQUIRE(g.num_relations() == 11);
  const auto ch = channel_weights(make_channels(2, 3, 11, 1));
  const auto rep = metapath_scores(ch, g, "drug", "protein");
  REQUIRE(rep.rows.size() == 13);
  double rel = 0.0;
  for (const auto& r : rep.rows) {
    CHECK(r.score == doctest::Approx(1.0 / 1331).epsilon(1e-12));
    rel += r.relative;
  }
  CHECK(std::abs(rel - 1.0) < 1e-9);
  const auto summed = metapath_scores(ch, g, "drug", "protein", ChannelAggregation::sum);
  CHECK(summed.rows[0].score == doctest::Approx(2.0 / 1331).epsilon(1e-12));
}

TEST_CASE("scores: one-hot channel picks its path") {
  Rng rng(11);
  const HetGraph g = dtinet_like(3, 3, 2, 2, 0.5, rng);
  const std::size_t k = g.num_relations();
  const std::size_t dd = g.relation_id("drug-drug"), dp = g.relation_id("drug-protein");
  const ChannelWeights ch = {one_hot(k, dd), one_hot(k, g.identity_id()), one_hot(k, dp)};
  const auto rep = metapath_scores({ch}, g, "drug", "protein");
  for (const auto& r : rep.rows) {
    const bool planted = r.sequence == std::vector<std::size_t>{dd, dp};
    CHECK(r.score == (planted ? 1.0 : 0.0));
    CHECK(r.relative == (planted ? 1.0 : 0.0));
  }
}

TEST_CASE("scores: identity placement takes the best slot") {
  // p = 3, sequence of length 1 -> best of three placements
  const ChannelWeights ch = {{0.1, 0.9}, {0.5, 0.5}, {0.8, 0.2}};
  // relation 0 real, relation 1 identity
  const double expect = std::max({0.1 * 0.5 * 0.2, 0.9 * 0.5 * 0.2, 0.9 * 0.5 * 0.8});
  CHECK(sequence_score(ch, {0}, 1) == expect);
  CHECK(sequence_score(ch, {0, 0, 0, 0}, 1) == 0.0);
}

TEST_CASE("prune: keeps the shortest prefix reaching the mass") {
  CHECK(prune_weights({0.7, 0.25, 0.05}, 1.0) == SelectionWeights{0.7, 0.25, 0.05});
  // 0.7 + 0.25 = 0.95 has not reached 0.99, so all three stay
  const auto all = prune_weights({0.7, 0.25, 0.05}, 0.99);
  CHECK(all[2] > 0.0);
  const auto two = prune_weights({0.295, 0.7, 0.005}, 0.99);
  CHECK(two[0] == doctest::Approx(0.295 / 0.995).epsilon(1e-14));
  CHECK(two[1] == doctest::Approx(0.7 / 0.995).epsilon(1e-14));
  CHECK(two[2] == 0.0);
  const auto first_only = prune_weights({0.7, 0.25, 0.05}, 0.7);
  CHECK(first_only == SelectionWeights{1.0, 0.0, 0.0});
  for (double keep : {0.01, 0.5, 0.99, 1.0}) CHECK(prune_weights({0.0, 1.0, 0.0}, keep) == SelectionWeights{0, 1, 0});
  CHECK_THROWS_AS(prune_weights({0.5, 0.5}, 0.0), ConfigError);
  CHECK_THROWS_AS(prune_weights({0.5, 0.5}, 1.5), ConfigError);
}

TEST_CASE("prune: applied per selection") {
  Rng rng(12);
  const auto ch = random_channel(3, 11, rng);
  const auto pruned = prune_selections({ch}, 0.9);
  for (const auto& sel : pruned[0]) CHECK(std::accumulate(sel.begin(), sel.end(), 0.0) == doctest::Approx(1.0));
}
