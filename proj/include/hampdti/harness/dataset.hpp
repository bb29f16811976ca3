#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hampdti/hetgraph/hetgraph.hpp"
#include "hampdti/matrix.hpp"

namespace hampdti {

// A heterogeneous DTI dataset. Node types are stored in canonical order with
// the drug type first and the protein type second; base relations use global
// node indices. The drug-protein relation doubles as the label source.
struct Dataset {
  std::vector<std::string> types;
  std::vector<std::vector<std::string>> ids;  // per type, local order
  std::vector<BaseRelation> relations;
  std::string dti_relation = "drug-protein";
  std::vector<std::string> smiles;     // per drug; empty when absent
  std::vector<std::string> sequences;  // per protein; empty when absent
  std::size_t duplicate_edges = 0;
  std::vector<std::string> warnings;

  NodeTypeTable table() const;
  std::size_t num_drugs() const { return ids.at(0).size(); }
  std::size_t num_proteins() const { return ids.at(1).size(); }
  bool has_features() const { return !smiles.empty() && !sequences.empty(); }

  std::size_t dti_index() const;
  // m x n, 1 where a drug-protein edge exists.
  Matrix labels() const;

  // Full graph; every drug-protein edge included.
  HetGraph graph() const;
  // Same graph with the drug-protein relation restricted to the pairs where
  // `train_positive` is nonzero. Per-fold graphs come from here so held-out
  // interactions never appear in any relation.
  HetGraph graph_with_dti(const Matrix& train_positive) const;

  // Counts block for `ingest` output.
  std::string stats() const;
};

// Manifest (tab or space separated, '#' comments, paths relative to the
// manifest):
//   node_type  <name>  <id file>  [expected count]
//   relation   <name>  <src type>  <dst type>  <edge file>  [expected edges]
//   dti        <relation name>
//   smiles     <file: drug_id smiles>
//   sequences  <file: protein_id sequence>
// The first node_type line is the drug type and the second the protein type.
// Id files list one id per line (first column); edge files two ids per line.
Dataset ingest(const std::filesystem::path& manifest);

// Writes `ds` as a manifest plus TSV files into `dir`.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct SynthConfig {
  std::size_t drugs = 60;
  std::size_t proteins = 60;
  std::size_t diseases = 40;
  std::size_t side_effects = 30;
  // Each disease links to this many drugs and proteins.
  std::size_t disease_drugs = 1;
  std::size_t disease_proteins = 3;
  // Density of the noise relations.
  double noise_density = 0.04;
  // Planted schema path for positives; names of base relations (a transposed
  // relation is written "<dst>-<src>").
  std::vector<std::string> planted = {"drug-disease", "disease-protein"};
  bool with_features = true;
  std::uint64_t seed = 1;
};

// Network whose drug-protein interactions are exactly the pairs connected by
// the planted meta-path; all other relations are random noise.
Dataset make_synthetic(const SynthConfig& cfg);

}  // namespace hampdti
