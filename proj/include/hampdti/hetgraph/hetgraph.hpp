#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hampdti/hetgraph/sparse.hpp"

namespace hampdti {

// Node types in canonical order with their global index windows.
class NodeTypeTable {
 public:
  NodeTypeTable() = default;
  NodeTypeTable(std::vector<std::string> types, std::vector<std::size_t> counts);

  const std::vector<std::string>& types() const noexcept { return types_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }

  std::size_t num_types() const noexcept { return types_.size(); }
  std::size_t num_nodes() const noexcept { return total_; }

  // Throws SchemaError for an unknown name.
  std::size_t type_index(const std::string& name) const;
  std::optional<std::size_t> find_type(const std::string& name) const;
  std::size_t type_of(std::size_t global) const;
  std::size_t offset(std::size_t type) const { return offsets_.at(type); }
  std::size_t count(std::size_t type) const { return counts_.at(type); }

 private:
  std::vector<std::string> types_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// One edge type as supplied by the input data, before transposes are added.
struct BaseRelation {
  std::string name;
  std::string src_type;
  std::string dst_type;
  // global node indices
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

struct RelationSpec {
  std::size_t id = 0;
  std::string name;
  // Empty for the identity relation, which maps every type to itself.
  std::string src_type;
  std::string dst_type;
  bool is_identity = false;
  bool symmetric = false;
  // Index of the base relation this was derived from; none for identity.
  std::optional<std::size_t> base = std::nullopt;
  bool transposed = false;
};

struct Relation {
  RelationSpec spec;
  SparseMatrix matrix;
};

// Heterogeneous graph: a node table plus K relation adjacency matrices over
// the global index space.
//
// Canonical relation order produced by build_relation_set:
//   1. same-type base relations, in input order, symmetrized
//   2. each cross-type base relation in input order, immediately followed by
//      its transpose (named "<dst>-<src>")
//   3. the identity relation, last
class HetGraph {
 public:
  HetGraph() = default;
  HetGraph(NodeTypeTable table, std::vector<Relation> relations, std::size_t duplicate_edges = 0);

  const NodeTypeTable& node_table() const noexcept { return table_; }
  const std::vector<Relation>& relations() const noexcept { return relations_; }
  const Relation& relation(std::size_t id) const { return relations_.at(id); }
  std::size_t num_relations() const noexcept { return relations_.size(); }
  std::size_t num_nodes() const noexcept { return table_.num_nodes(); }
  std::size_t identity_id() const noexcept { return identity_id_; }
  std::optional<std::size_t> find_relation(const std::string& name) const;
  std::size_t relation_id(const std::string& name) const;
  // Number of input edges dropped as duplicates during construction.
  std::size_t duplicate_edges() const noexcept { return duplicate_edges_; }

  // True when `rel` may start from a node of `type`; identity accepts every type.
  bool accepts(std::size_t rel, std::size_t type) const;
  // Type reached after following `rel` from `type`. Requires accepts().
  std::size_t step_type(std::size_t rel, std::size_t type) const;

 private:
  NodeTypeTable table_;
  std::vector<Relation> relations_;
  std::size_t identity_id_ = 0;
  std::size_t duplicate_edges_ = 0;
};

HetGraph build_relation_set(const NodeTypeTable& table, const std::vector<BaseRelation>& base);

// Number (weighted) of concrete node paths realizing `relations` from src to
// dst, found by depth-first enumeration over adjacency lists.
double path_count_oracle(const HetGraph& g, const std::vector<std::size_t>& relations, std::size_t src,
                         std::size_t dst);

// All non-identity, type-compatible relation sequences of length 1..max_len
// from `from_type` to `to_type`. Ordered by length, then lexicographically by
// relation id.
std::vector<std::vector<std::size_t>> enumerate_schema_metapaths(const HetGraph& g, const std::string& from_type,
                                                                 const std::string& to_type, std::size_t max_len);

// Chained product of the relation matrices (the matrix route of the oracle).
SparseMatrix compose_relations(const HetGraph& g, const std::vector<std::size_t>& relations);

std::string describe_sequence(const HetGraph& g, const std::vector<std::size_t>& relations);

}  // namespace hampdti
