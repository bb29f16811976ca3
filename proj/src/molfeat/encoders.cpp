#include "hampdti/molfeat/encoders.hpp"

#include <cmath>

#include "hampdti/error.hpp"
#include "hampdti/tensor/ops.hpp"
#include "hampdti/tensor/optim.hpp"

namespace hampdti::molfeat {

using tensor::Tape;
using tensor::Tensor;

PreparedMolecule prepare_molecule(const MoleculeGraph& g) {
  if (g.atoms.empty()) throw Error("molecule has no atoms");
  std::vector<Triplet> t;
  t.reserve(2 * g.bonds.size());
  for (const Bond& b : g.bonds) {
    t.push_back({b.a, b.b, 1.0});
    t.push_back({b.b, b.a, 1.0});
  }
  const auto adj = SparseMatrix::from_triplets(g.atoms.size(), g.atoms.size(), std::move(t));
  return {std::make_shared<const SparseMatrix>(sym_normalize(adj, true)), atom_feature_matrix(g)};
}

DrugEncoder::DrugEncoder(std::vector<std::size_t> widths, Rng& rng, tensor::Activation act)
    : widths_(std::move(widths)), act_(act) {
  if (widths_.size() < 2) throw ConfigError("drug encoder needs at least one layer");
  if (widths_.front() != kAtomFeatureDim) throw ConfigError("drug encoder input width must be 78");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weights_.push_back(
        Tensor::parameter(tensor::glorot(widths_[l], widths_[l + 1], rng), "drug_gcn.w" + std::to_string(l)));
  }
}

Tensor DrugEncoder::encode(Tape& tape, const PreparedMolecule& mol) const {
  Tensor h = Tensor::constant(mol.features);
  for (const Tensor& w : weights_) {
    h = tensor::activate(tape, tensor::spmm_dense_diff(tape, mol.norm_adj, tensor::matmul(tape, h, w)), act_);
  }
  return tensor::row_max_pool(tape, h);
}

Tensor DrugEncoder::encode_all(Tape& tape, const std::vector<PreparedMolecule>& mols) const {
  if (mols.empty()) throw Error("no molecules to encode");
  std::vector<Tensor> rows;
  rows.reserve(mols.size());
  for (const auto& m : mols) rows.push_back(encode(tape, m));
  return tensor::concat_rows(tape, rows);
}

void DrugEncoder::save(std::vector<tensor::NamedMatrix>& out) const {
  for (const auto& w : weights_) out.push_back({w.name(), w.value()});
}

void DrugEncoder::load(const tensor::Checkpoint& ckpt) {
  for (auto w : weights_) {
    const Matrix& m = ckpt.get(w.name());
    if (!m.same_shape(w.value())) throw ShapeError("checkpoint shape mismatch for '" + w.name() + "'");
    w.mutable_value() = m;
  }
}

tensor::Mlp make_protein_transform(std::vector<std::size_t> widths, Rng& rng) {
  return tensor::Mlp("protein_mlp", std::move(widths), tensor::Activation::relu, tensor::Activation::relu, true, rng);
}

Tensor protein_transform(Tape& tape, const Tensor& ctd, const tensor::Mlp& mlp) { return mlp.forward(tape, ctd); }

Matrix scale_ctd(const Matrix& ctd) {
  if (ctd.cols != kCtdDim) throw ShapeError("CTD matrix must have 147 columns");
  Matrix out = ctd;
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t a = 0; a < kCtdAttributes; ++a) {
      for (std::size_t k = 6; k < kCtdPerAttribute; ++k) out(r, a * kCtdPerAttribute + k) /= 100.0;
    }
  }
  return out;
}

std::vector<Tensor> FeatureModel::params() const {
  std::vector<Tensor> out = drug.params();
  for (const auto& p : protein.params()) out.push_back(p);
  return out;
}

tensor::Checkpoint FeatureModel::checkpoint() const {
  tensor::Checkpoint c;
  c.meta["kind"] = "feature-encoders";
  drug.save(c.tensors);
  protein.save(c.tensors);
  return c;
}

FeatureModel make_feature_model(const PretrainConfig& cfg) {
  Rng rng = Rng::derive(cfg.seed, 0x5747);
  std::vector<std::size_t> dw = {kAtomFeatureDim};
  dw.insert(dw.end(), cfg.drug_hidden.begin(), cfg.drug_hidden.end());
  dw.push_back(cfg.dim);
  std::vector<std::size_t> pw = {kCtdDim};
  pw.insert(pw.end(), cfg.protein_hidden.begin(), cfg.protein_hidden.end());
  pw.push_back(cfg.dim);
  FeatureModel m;
  m.drug = DrugEncoder(dw, rng);
  m.protein = make_protein_transform(pw, rng);
  return m;
}

Tensor stage1_loss(Tape& tape, const FeatureModel& model, const std::vector<PreparedMolecule>& drugs,
                   const Tensor& ctd, const Matrix& labels, const Matrix& mask, double gamma) {
  const Tensor xu = model.drug.encode_all(tape, drugs);
  const Tensor xs = protein_transform(tape, ctd, model.protein);
  const Tensor scores = tensor::matmul_nt(tape, xu, xs);
  return tensor::masked_weighted_sq_loss(tape, scores, labels, mask, gamma);
}

PretrainResult pretrain_features(const std::vector<PreparedMolecule>& drugs, const Matrix& ctd, const Matrix& labels,
                                 const Matrix& train_mask, const PretrainConfig& cfg) {
  if (labels.rows != drugs.size() || labels.cols != ctd.rows || !labels.same_shape(train_mask)) {
    throw ShapeError("pretrain: labels/mask must be (#drugs x #proteins)");
  }
  FeatureModel model = make_feature_model(cfg);
  const Tensor ctd_in = Tensor::constant(scale_ctd(ctd));
  tensor::Adam opt(model.params(), {.lr = cfg.lr});
  PretrainResult res;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    const Tensor loss = stage1_loss(tape, model, drugs, ctd_in, labels, train_mask, cfg.gamma);
    if (!std::isfinite(loss.item())) {
      throw NumericError("stage-1 loss diverged at epoch " + std::to_string(epoch));
    }
    res.loss_history.push_back(loss.item());
    tape.backward(loss);
    opt.step();
  }
  Tape tape;
  res.drug_features = model.drug.encode_all(tape, drugs).value();
  res.protein_features = protein_transform(tape, ctd_in, model.protein).value();
  res.checkpoint = model.checkpoint();
  return res;
}

}  // namespace hampdti::molfeat
