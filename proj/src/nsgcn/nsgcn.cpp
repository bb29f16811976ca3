#include "hampdti/nsgcn/nsgcn.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hampdti/error.hpp"
#include "hampdti/harness/metrics.hpp"

namespace hampdti::nsgcn {

using tensor::Tape;
using tensor::Tensor;

void ModelConfig::validate() const {
  if (num_graphs() == 0) throw ConfigError("no meta-path channels and no DTI graph: nothing to fuse");
  if (use_metapaths && length == 0) throw ConfigError("meta-path length p must be at least 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (dim == 0) throw ConfigError("embedding width must be positive");
}

std::string ModelConfig::describe() const {
  std::ostringstream os;
  os << "dim=" << dim << " hidden=";
  for (std::size_t i = 0; i < hidden.size(); ++i) os << (i ? "," : "") << hidden[i];
  os << " c=" << channels << " p=" << length << " t=" << steps << " gamma=" << tensor::format_double(gamma)
     << " init=" << tensor::format_double(selection_init) << " metapaths=" << use_metapaths
     << " dti=" << use_dti_graph << " entangled=" << entangled << " seed=" << seed;
  return os.str();
}

GraphInputs make_inputs(const HetGraph& g, const metapath::BlockWindow& w, Matrix xu, Matrix xs, const Matrix& labels,
                        const std::optional<Matrix>& train_mask) {
  if (xu.rows != w.rows || xs.rows != w.cols) throw ShapeError("feature rows do not match the drug/protein counts");
  if (labels.rows != w.rows || labels.cols != w.cols) throw ShapeError("labels must be (#drugs x #proteins)");
  GraphInputs in;
  in.graph = &g;
  in.window = w;
  in.drug_features = std::move(xu);
  in.protein_features = std::move(xs);
  in.dti_norm = std::make_shared<const SparseMatrix>(sym_normalize(metapath::dti_graph(labels, train_mask), true));
  return in;
}

namespace {

// D^-1/2 ([[I, B], [B^T, I]]) D^-1/2 in factored form.
struct BlockOperator {
  Tensor bn;     // D_u^-1/2 B D_s^-1/2
  Tensor inv_u;  // 1 / deg_u
  Tensor inv_s;

  BlockOperator(Tape& tape, const Tensor& block) {
    const Tensor du = tensor::add_scalar(tape, tensor::row_sums(tape, block), 1.0);
    const Tensor ds = tensor::add_scalar(tape, tensor::col_sums(tape, block), 1.0);
    const Tensor ru = tensor::inv_sqrt(tape, du), rs = tensor::inv_sqrt(tape, ds);
    bn = tensor::scale_cols(tape, tensor::scale_rows(tape, block, ru), rs);
    inv_u = tensor::mul(tape, ru, ru);
    inv_s = tensor::mul(tape, rs, rs);
  }

  SplitEmbedding apply(Tape& tape, const SplitEmbedding& h) const {
    return {tensor::add(tape, tensor::scale_rows(tape, h.drugs, inv_u), tensor::matmul(tape, bn, h.proteins)),
            tensor::add(tape, tensor::scale_rows(tape, h.proteins, inv_s),
                        tensor::matmul(tape, tensor::transpose(tape, bn), h.drugs))};
  }
};

SplitEmbedding split(Tape& tape, const Tensor& x, std::size_t m) {
  return {tensor::slice_rows(tape, x, 0, m), tensor::slice_rows(tape, x, m, x.rows())};
}

Tensor join(Tape& tape, const SplitEmbedding& h) { return tensor::concat_rows(tape, {h.drugs, h.proteins}); }

}  // namespace

SplitEmbedding propagate(Tape& tape, const Tensor& block, SplitEmbedding h, std::size_t steps) {
  if (h.drugs.rows() != block.rows() || h.proteins.rows() != block.cols()) throw ShapeError("propagate: shape mismatch");
  if (steps == 0) return h;
  const BlockOperator op(tape, block);
  for (std::size_t s = 0; s < steps; ++s) h = op.apply(tape, h);
  return h;
}

Tensor propagate_sparse(Tape& tape, const std::shared_ptr<const SparseMatrix>& norm, Tensor x, std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) x = tensor::spmm_dense_diff(tape, norm, x);
  return x;
}

Tensor fuse(Tape& tape, const std::vector<Tensor>& embeddings, const Tensor& logits) {
  if (embeddings.size() != logits.rows()) throw ShapeError("fusion needs one logit per embedding");
  return tensor::weighted_sum(tape, embeddings, tensor::softmax_vector(tape, logits));
}

Tensor decode(Tape& tape, const Tensor& z, std::size_t drugs) {
  if (drugs > z.rows()) throw ShapeError("decode: split point past the end");
  return tensor::matmul_nt(tape, tensor::slice_rows(tape, z, 0, drugs), tensor::slice_rows(tape, z, drugs, z.rows()));
}

Model::Model(const ModelConfig& cfg, std::size_t drug_dim, std::size_t protein_dim, std::size_t relations)
    : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng::derive(cfg.seed, 0x6e73);
  channels_ = metapath::make_channels(cfg.active_channels(), cfg.length, relations, cfg.seed, cfg.selection_init);
  if (cfg.entangled) {
    if (drug_dim != protein_dim) throw ConfigError("entangled GCN needs equal drug and protein feature widths");
    std::size_t in = drug_dim;
    for (std::size_t l = 0; l < std::max<std::size_t>(cfg.steps, 1); ++l) {
      gcn_weights_.push_back(Tensor::parameter(tensor::glorot(in, cfg.dim, rng), "gcn.w" + std::to_string(l)));
      in = cfg.dim;
    }
  } else {
    auto widths = [&](std::size_t in) {
      std::vector<std::size_t> w = {in};
      w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
      w.push_back(cfg.dim);
      return w;
    };
    drug_mlp_ = tensor::Mlp("drug_mlp", widths(drug_dim), tensor::Activation::relu, tensor::Activation::identity, true, rng);
    protein_mlp_ =
        tensor::Mlp("protein_mlp", widths(protein_dim), tensor::Activation::relu, tensor::Activation::identity, true, rng);
  }
  fusion_logits_ = Tensor::parameter(Matrix(cfg_.num_graphs(), 1), "fusion.a");
}

Tensor Model::transform(Tape& tape, const GraphInputs& in) const {
  const Tensor xu = Tensor::constant(in.drug_features), xs = Tensor::constant(in.protein_features);
  if (cfg_.entangled) {
    if (xu.cols() != xs.cols()) throw ShapeError("feature widths differ");
    return tensor::concat_rows(tape, {xu, xs});
  }
  return tensor::concat_rows(tape, {drug_mlp_.forward(tape, xu), protein_mlp_.forward(tape, xs)});
}

Model::Output Model::forward(Tape& tape, const GraphInputs& in,
                             const std::vector<metapath::ChannelWeights>* override_weights) const {
  if (!in.graph) throw Error("graph inputs are empty");
  const std::size_t m = in.window.rows;
  const Tensor x = transform(tape, in);

  // Either t parameter-free steps, or (entangled) t rounds of step-then-weight.
  auto embed = [&](const auto& step) {
    if (!cfg_.entangled) {
      Tensor h = x;
      for (std::size_t s = 0; s < cfg_.steps; ++s) h = step(h);
      return h;
    }
    Tensor h = x;
    for (std::size_t l = 0; l < gcn_weights_.size(); ++l) {
      if (cfg_.steps > 0) h = step(h);
      h = tensor::matmul(tape, h, gcn_weights_[l]);
      if (l + 1 < gcn_weights_.size()) h = tensor::relu(tape, h);
    }
    return h;
  };

  Output out;
  if (override_weights && override_weights->size() != channels_.size()) {
    throw ShapeError("override weights must cover every channel");
  }
  for (std::size_t ci = 0; ci < channels_.size(); ++ci) {
    std::vector<Tensor> alphas;
    for (std::size_t i = 0; i < channels_[ci].length(); ++i) {
      if (override_weights) {
        const auto& w = (*override_weights)[ci].at(i);
        alphas.push_back(Tensor::constant(Matrix(w.size(), 1, w)));
      } else {
        alphas.push_back(channels_[ci].selections[i].weights(tape));
      }
    }
    const Tensor block = metapath::compose_block(tape, *in.graph, alphas, in.window);
    const BlockOperator op(tape, block);
    out.embeddings.push_back(embed([&](const Tensor& h) { return join(tape, op.apply(tape, split(tape, h, m))); }));
  }
  if (cfg_.use_dti_graph) {
    out.embeddings.push_back(embed([&](const Tensor& h) { return tensor::spmm_dense_diff(tape, in.dti_norm, h); }));
  }
  out.fusion = tensor::softmax_vector(tape, fusion_logits_);
  const Tensor z = tensor::weighted_sum(tape, out.embeddings, out.fusion);
  out.scores = decode(tape, z, m);
  return out;
}

Tensor Model::loss(Tape& tape, const GraphInputs& in, const Matrix& labels, const Matrix& mask) const {
  return tensor::masked_weighted_sq_loss(tape, forward(tape, in).scores, labels, mask, cfg_.gamma);
}

std::vector<Tensor> Model::params() const {
  std::vector<Tensor> out;
  for (const auto& ch : channels_)
    for (const auto& p : ch.params()) out.push_back(p);
  for (const auto& p : drug_mlp_.params()) out.push_back(p);
  for (const auto& p : protein_mlp_.params()) out.push_back(p);
  for (const auto& p : gcn_weights_) out.push_back(p);
  out.push_back(fusion_logits_);
  return out;
}

std::vector<double> Model::fusion_weights() const {
  Tape tape;
  return tensor::softmax_vector(tape, fusion_logits_.detached()).value().data;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

tensor::Checkpoint Model::checkpoint() const {
  tensor::Checkpoint c;
  c.meta["kind"] = "nsgcn";
  c.meta["config"] = cfg_.describe();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(cfg_.describe())));
  c.meta["config_hash"] = hex;
  for (const auto& p : params()) c.tensors.push_back({p.name(), p.value()});
  return c;
}

void Model::load(const tensor::Checkpoint& ckpt) {
  for (auto p : params()) {
    const Matrix& m = ckpt.get(p.name());
    if (!m.same_shape(p.value())) throw ShapeError("checkpoint shape mismatch for '" + p.name() + "'");
    p.mutable_value() = m;
  }
}

std::vector<Matrix> Model::snapshot() const {
  std::vector<Matrix> out;
  for (const auto& p : params()) out.push_back(p.value());
  return out;
}

void Model::restore(const std::vector<Matrix>& values) {
  auto ps = params();
  if (ps.size() != values.size()) throw ShapeError("snapshot does not match the model");
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].mutable_value() = values[i];
}

void masked_entries(const Matrix& scores, const Matrix& labels, const Matrix& mask, std::vector<double>& s,
                    std::vector<double>& y) {
  if (!scores.same_shape(labels) || !scores.same_shape(mask)) throw ShapeError("masked_entries: shape mismatch");
  s.clear();
  y.clear();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.data[i] == 0.0) continue;
    s.push_back(scores.data[i]);
    y.push_back(labels.data[i]);
  }
}

History train(Model& model, const GraphInputs& in, const Matrix& labels, const Matrix& train_mask,
              const std::optional<Matrix>& val_mask, const TrainConfig& cfg) {
  tensor::Adam opt(model.params(), {.lr = cfg.lr});
  History h;
  std::vector<Matrix> best, last_good = model.snapshot();
  h.best_val_auc = -1.0;
  std::vector<double> vs, vy;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    Tensor loss;
    Matrix scores;
    try {
      const auto out = model.forward(tape, in);
      scores = out.scores.value();
      loss = tensor::masked_weighted_sq_loss(tape, out.scores, labels, train_mask, model.config().gamma);
    } catch (const NumericError& e) {
      model.restore(last_good);
      throw NumericError(std::string("training diverged at epoch ") + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(loss.item())) {
      model.restore(last_good);
      throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
    }
    last_good = model.snapshot();
    h.loss.push_back(loss.item());
    if (val_mask) {
      masked_entries(scores, labels, *val_mask, vs, vy);
      const double auc = roc_auc(vs, vy);
      h.val_auc.push_back(auc);
      if (auc > h.best_val_auc) {
        h.best_val_auc = auc;
        h.best_epoch = epoch;
        best = last_good;
      } else if (cfg.patience > 0 && epoch - h.best_epoch >= cfg.patience) {
        break;
      }
    }
    tape.backward(loss);
    opt.step();
  }
  if (val_mask && !best.empty()) model.restore(best);
  if (!val_mask) {
    h.best_epoch = h.loss.empty() ? 0 : h.loss.size() - 1;
    h.best_val_auc = 0.0;
  }
  return h;
}

Matrix predict(const Model& model, const GraphInputs& in, const std::vector<metapath::ChannelWeights>* override_weights) {
  Tape tape;
  return model.forward(tape, in, override_weights).scores.value();
}

}  // namespace hampdti::nsgcn
