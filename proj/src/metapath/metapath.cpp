#include "hampdti/metapath/metapath.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "hampdti/error.hpp"
#include "hampdti/kernels/kernels.hpp"

namespace hampdti::metapath {

using tensor::Tape;
using tensor::Tensor;

SelectionWeights SoftSelection::weights() const {
  Tape tape;
  return tensor::softmax_vector(tape, logits.detached()).value().data;
}

ChannelWeights Channel::weights() const {
  ChannelWeights out;
  for (const auto& s : selections) out.push_back(s.weights());
  return out;
}

std::vector<Tensor> Channel::params() const {
  std::vector<Tensor> out;
  for (const auto& s : selections) out.push_back(s.logits);
  return out;
}

std::vector<Channel> make_channels(std::size_t c, std::size_t p, std::size_t k, std::uint64_t seed,
                                   double init_scale) {
  if (p == 0) throw ConfigError("meta-path length p must be at least 1");
  if (k == 0) throw ConfigError("no relations to select from");
  std::vector<Channel> out(c);
  for (std::size_t ci = 0; ci < c; ++ci) {
    Rng rng = Rng::derive(seed, 0x4d50 + ci);
    for (std::size_t i = 0; i < p; ++i) {
      Matrix e(k, 1);
      if (init_scale != 0.0)
        for (double& v : e.data) v = init_scale * rng.normal();
      out[ci].selections.push_back(
          {Tensor::parameter(std::move(e), "channel" + std::to_string(ci) + ".sel" + std::to_string(i))});
    }
  }
  return out;
}

std::vector<ChannelWeights> channel_weights(const std::vector<Channel>& channels) {
  std::vector<ChannelWeights> out;
  for (const auto& ch : channels) out.push_back(ch.weights());
  return out;
}

BlockWindow type_window(const HetGraph& g, const std::string& row_type, const std::string& col_type) {
  const auto& t = g.node_table();
  const std::size_t r = t.type_index(row_type), c = t.type_index(col_type);
  return {t.offset(r), t.count(r), t.offset(c), t.count(c)};
}

namespace {

void check_weights(const SelectionWeights& alpha, const HetGraph& g) {
  if (alpha.size() != g.num_relations()) {
    throw ShapeError("selection has " + std::to_string(alpha.size()) + " weights for " +
                     std::to_string(g.num_relations()) + " relations");
  }
}

void check_window(const HetGraph& g, const BlockWindow& w) {
  if (w.row0 + w.rows > g.num_nodes() || w.col0 + w.cols > g.num_nodes()) throw ShapeError("block window out of range");
}

SparseMatrix row_selector(const BlockWindow& w, std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < w.rows; ++i) t.push_back({i, w.row0 + i, 1.0});
  return SparseMatrix::from_triplets(w.rows, n, std::move(t));
}

}  // namespace

SparseMatrix soft_adjacency(const SelectionWeights& alpha, const HetGraph& g) {
  check_weights(alpha, g);
  std::vector<const SparseMatrix*> mats;
  for (const auto& r : g.relations()) mats.push_back(&r.matrix);
  return linear_combination(mats, alpha);
}

SparseMatrix soft_adjacency(const SoftSelection& sel, const HetGraph& g) { return soft_adjacency(sel.weights(), g); }

MetaPathGraph compose_weights(const ChannelWeights& alphas, const HetGraph& g, const BlockWindow& w,
                              bool materialize_full) {
  if (alphas.empty()) throw ConfigError("channel has no selections");
  check_window(g, w);
  std::vector<SparseMatrix> soft;
  for (const auto& a : alphas) soft.push_back(soft_adjacency(a, g));
  MetaPathGraph out;
  SparseMatrix x = row_selector(w, g.num_nodes());
  for (const auto& r : soft) x = spmm(x, r);
  out.block = x.dense_block(0, w.rows, w.col0, w.col0 + w.cols);
  out.bipartite = bipartite_lift(out.block);
  if (materialize_full) {
    SparseMatrix f = soft.front();
    for (std::size_t i = 1; i < soft.size(); ++i) f = spmm(f, soft[i]);
    out.full = std::move(f);
  }
  return out;
}

MetaPathGraph compose_channel(const Channel& ch, const HetGraph& g, const BlockWindow& w, bool materialize_full) {
  return compose_weights(ch.weights(), g, w, materialize_full);
}

// Forward keeps the prefixes L_i = P R^(1) ... R^(i-1) (P selects the window
// rows). Backward walks suffixes S_i = R^(i) ... R^(p) Q (Q selects the window
// columns) from the right; with M_i = L_i^T G,
//   d alpha_k^(i) = sum over stored (a, b) of R_k: R_k[a,b] * <M_i[a,:], S_{i+1}[b,:]>.
Tensor compose_block(Tape& tape, const HetGraph& g, const std::vector<Tensor>& alphas, const BlockWindow& w) {
  if (alphas.empty()) throw ConfigError("channel has no selections");
  check_window(g, w);
  const std::size_t v = g.num_nodes(), p = alphas.size();
  auto soft = std::make_shared<std::vector<SparseMatrix>>();
  for (const auto& a : alphas) {
    if (a.cols() != 1) throw ShapeError("selection weights must be a column vector");
    soft->push_back(soft_adjacency(a.value().data, g));
  }
  auto prefix = std::make_shared<std::vector<Matrix>>();
  Matrix l(w.rows, v);
  for (std::size_t i = 0; i < w.rows; ++i) l(i, w.row0 + i) = 1.0;
  for (std::size_t i = 0; i < p; ++i) {
    Matrix next;
    kernels::dense_csr(l, (*soft)[i].view(), next);
    prefix->push_back(std::move(l));
    l = std::move(next);
  }
  Matrix block(w.rows, w.cols);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) block(i, j) = l(i, w.col0 + j);
  if (!block.all_finite()) throw NumericError("op 'compose_block' produced non-finite values");

  bool needs = false;
  for (const auto& a : alphas) needs = needs || a.requires_grad();
  Tensor out = Tensor::intermediate(std::move(block), needs, "compose_block");
  if (!needs) return out;

  tensor::Node* o = out.node();
  tape.record("compose_block", alphas, out, [o, alphas, soft, prefix, w, v, p, &g] {
    const Matrix& grad = o->grad;
    Matrix s(v, w.cols);
    for (std::size_t j = 0; j < w.cols; ++j) s(w.col0 + j, j) = 1.0;
    for (std::size_t step = p; step-- > 0;) {
      if (alphas[step].requires_grad()) {
        Matrix m;
        kernels::gemm_tn((*prefix)[step], grad, m);
        Matrix da(g.num_relations(), 1);
        for (std::size_t k = 0; k < g.num_relations(); ++k) {
          const SparseMatrix& r = g.relation(k).matrix;
          const auto rp = r.row_ptr();
          const auto ci = r.col_idx();
          const auto vals = r.values();
          std::vector<double> partial(v, 0.0);
#pragma omp parallel for schedule(static)
          for (std::size_t a = 0; a < v; ++a) {
            double acc = 0.0;
            for (std::size_t e = rp[a]; e < rp[a + 1]; ++e) {
              const std::size_t b = ci[e];
              double dot = 0.0;
              for (std::size_t j = 0; j < w.cols; ++j) dot += m(a, j) * s(b, j);
              acc += vals[e] * dot;
            }
            partial[a] = acc;
          }
          double total = 0.0;
          for (double x : partial) total += x;
          da(k, 0) = total;
        }
        alphas[step].node()->accumulate(da);
      }
      if (step > 0) {
        Matrix next;
        kernels::csr_dense((*soft)[step].view(), s, next);
        s = std::move(next);
      }
    }
  });
  return out;
}

SparseMatrix dti_graph(const Matrix& labels, const std::optional<Matrix>& train_mask) {
  if (!train_mask) throw ConfigError("the DTI graph needs an explicit training mask");
  if (!labels.same_shape(*train_mask)) throw ShapeError("training mask shape differs from labels");
  Matrix b(labels.rows, labels.cols);
  for (std::size_t i = 0; i < labels.size(); ++i) b.data[i] = (labels.data[i] == 1.0 && train_mask->data[i] != 0.0);
  return bipartite_lift(b);
}

ComposedGraphs compose_all(const std::vector<Channel>& channels, const HetGraph& g, const BlockWindow& w,
                           const Matrix& labels, const std::optional<Matrix>& train_mask) {
  ComposedGraphs out;
  out.dti = dti_graph(labels, train_mask);
  for (const auto& ch : channels) out.channels.push_back(compose_channel(ch, g, w));
  return out;
}

double sequence_score(const ChannelWeights& ch, const std::vector<std::size_t>& sequence, std::size_t identity_id) {
  const std::size_t p = ch.size(), q = sequence.size();
  if (q > p) return 0.0;
  double best = 0.0;
  // slot[j] = position of the j-th relation; positions strictly increasing.
  std::vector<std::size_t> slot(q);
  auto visit = [&](auto&& self, std::size_t j, std::size_t from) -> void {
    if (j == q) {
      double prod = 1.0;
      std::size_t next = 0;
      for (std::size_t pos = 0; pos < p; ++pos) {
        if (next < q && slot[next] == pos) prod *= ch[pos].at(sequence[next++]);
        else prod *= ch[pos].at(identity_id);
      }
      best = std::max(best, prod);
      return;
    }
    for (std::size_t pos = from; pos + (q - j) <= p; ++pos) {
      slot[j] = pos;
      self(self, j + 1, pos + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

MetaPathScoreReport metapath_scores(const std::vector<ChannelWeights>& channels, const HetGraph& g,
                                    const std::string& from_type, const std::string& to_type,
                                    ChannelAggregation agg) {
  if (channels.empty()) throw ConfigError("no channels to score");
  const std::size_t p = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != p) throw ShapeError("channels differ in length");
    for (const auto& a : ch) check_weights(a, g);
  }
  MetaPathScoreReport rep;
  double total = 0.0;
  for (auto& seq : enumerate_schema_metapaths(g, from_type, to_type, p)) {
    double s = 0.0;
    for (const auto& ch : channels) {
      const double v = sequence_score(ch, seq, g.identity_id());
      s = agg == ChannelAggregation::max ? std::max(s, v) : s + v;
    }
    total += s;
    rep.rows.push_back({seq, describe_sequence(g, seq), s, 0.0});
  }
  for (auto& r : rep.rows) r.relative = total > 0.0 ? r.score / total : 0.0;
  return rep;
}

SelectionWeights prune_weights(const SelectionWeights& alpha, double keep_mass) {
  if (!(keep_mass > 0.0 && keep_mass <= 1.0)) throw ConfigError("keep_mass must lie in (0, 1]");
  const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("selection weights sum to zero");
  std::vector<std::size_t> order(alpha.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return alpha[a] > alpha[b]; });
  SelectionWeights out(alpha.size(), 0.0);
  double kept = 0.0;
  for (std::size_t idx : order) {
    out[idx] = alpha[idx];
    kept += alpha[idx];
    if (kept >= keep_mass * total - 1e-12 * total) break;
  }
  for (double& x : out) x /= kept;
  return out;
}

std::vector<ChannelWeights> prune_selections(const std::vector<ChannelWeights>& channels, double keep_mass) {
  std::vector<ChannelWeights> out = channels;
  for (auto& ch : out)
    for (auto& sel : ch) sel = prune_weights(sel, keep_mass);
  return out;
}

}  // namespace hampdti::metapath
