#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hampdti/hetgraph/sparse.hpp"
#include "hampdti/molfeat/features.hpp"
#include "hampdti/molfeat/smiles.hpp"
#include "hampdti/tensor/io.hpp"
#include "hampdti/tensor/layers.hpp"

namespace hampdti::molfeat {

// Molecule ready for the GCN: normalized adjacency with self-loops plus the
// q x 78 atom feature matrix.
struct PreparedMolecule {
  std::shared_ptr<const SparseMatrix> norm_adj;
  Matrix features;
};

PreparedMolecule prepare_molecule(const MoleculeGraph& g);

// L rounds of H <- act(D^-1/2 (A+I) D^-1/2 H W) followed by a column-wise max
// over atoms.
class DrugEncoder {
 public:
  DrugEncoder() = default;
  // widths = {78, hidden..., d}
  DrugEncoder(std::vector<std::size_t> widths, Rng& rng, tensor::Activation act = tensor::Activation::relu);

  tensor::Tensor encode(tensor::Tape& tape, const PreparedMolecule& mol) const;
  // m x d, one row per molecule.
  tensor::Tensor encode_all(tensor::Tape& tape, const std::vector<PreparedMolecule>& mols) const;

  std::size_t out_width() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::vector<tensor::Tensor> params() const { return weights_; }
  std::vector<tensor::Tensor>& weights() { return weights_; }

  void save(std::vector<tensor::NamedMatrix>& out) const;
  void load(const tensor::Checkpoint& ckpt);

 private:
  std::vector<std::size_t> widths_;
  std::vector<tensor::Tensor> weights_;
  tensor::Activation act_ = tensor::Activation::relu;
};

// Per-row perceptron 147 -> hidden -> d shared by every protein.
tensor::Mlp make_protein_transform(std::vector<std::size_t> widths, Rng& rng);
tensor::Tensor protein_transform(tensor::Tape& tape, const tensor::Tensor& ctd, const tensor::Mlp& mlp);

// CTD rows rescaled for the perceptron: distribution columns divided by 100 so
// every entry lies in [0, 1].
Matrix scale_ctd(const Matrix& ctd);

struct PretrainConfig {
  std::size_t dim = 128;
  std::vector<std::size_t> drug_hidden = {156, 312};
  std::vector<std::size_t> protein_hidden = {256};
  std::size_t epochs = 100;
  double lr = 1e-3;
  double gamma = 0.4;
  std::uint64_t seed = 1;
};

struct FeatureModel {
  DrugEncoder drug;
  tensor::Mlp protein;

  std::vector<tensor::Tensor> params() const;
  tensor::Checkpoint checkpoint() const;
};

FeatureModel make_feature_model(const PretrainConfig& cfg);

struct PretrainResult {
  Matrix drug_features;     // m x d
  Matrix protein_features;  // n x d
  std::vector<double> loss_history;
  tensor::Checkpoint checkpoint;
};

// Stage-1 training: drug encoder + protein perceptron scored by the bilinear
// decoder X_u X_s^T under the weighted squared loss, on the masked (training)
// entries only.
PretrainResult pretrain_features(const std::vector<PreparedMolecule>& drugs, const Matrix& ctd, const Matrix& labels,
                                 const Matrix& train_mask, const PretrainConfig& cfg);

// Forward pass of the stage-1 scorer; exposed for gradient checks.
tensor::Tensor stage1_loss(tensor::Tape& tape, const FeatureModel& model, const std::vector<PreparedMolecule>& drugs,
                           const tensor::Tensor& ctd, const Matrix& labels, const Matrix& mask, double gamma);

}  // namespace hampdti::molfeat
