#include "hampdti/hetgraph/hetgraph.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "hampdti/error.hpp"

namespace hampdti {

NodeTypeTable::NodeTypeTable(std::vector<std::string> types, std::vector<std::size_t> counts)
    : types_(std::move(types)), counts_(std::move(counts)) {
  if (types_.size() != counts_.size()) throw SchemaError("node type names and counts differ in length");
  std::set<std::string> seen;
  offsets_.reserve(types_.size());
  for (std::size_t t = 0; t < types_.size(); ++t) {
    if (types_[t].empty()) throw SchemaError("empty node type name");
    if (!seen.insert(types_[t]).second) throw SchemaError("duplicate node type '" + types_[t] + "'");
    if (counts_[t] == 0) throw SchemaError("node type '" + types_[t] + "' has no nodes");
    offsets_.push_back(total_);
    total_ += counts_[t];
  }
}

std::optional<std::size_t> NodeTypeTable::find_type(const std::string& name) const {
  const auto it = std::find(types_.begin(), types_.end(), name);
  if (it == types_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - types_.begin());
}

std::size_t NodeTypeTable::type_index(const std::string& name) const {
  if (auto t = find_type(name)) return *t;
  throw SchemaError("unknown node type '" + name + "'");
}

std::size_t NodeTypeTable::type_of(std::size_t global) const {
  if (global >= total_) throw SchemaError("node index " + std::to_string(global) + " out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

HetGraph::HetGraph(NodeTypeTable table, std::vector<Relation> relations, std::size_t duplicate_edges)
    : table_(std::move(table)), relations_(std::move(relations)), duplicate_edges_(duplicate_edges) {
  const std::size_t n = table_.num_nodes();
  std::size_t identities = 0;
  for (std::size_t k = 0; k < relations_.size(); ++k) {
    const Relation& rel = relations_[k];
    if (rel.spec.id != k) throw SchemaError("relation ids must be dense 0..K-1");
    if (rel.matrix.n_rows() != n || rel.matrix.n_cols() != n) {
      throw SchemaError("relation '" + rel.spec.name + "' is not |V|x|V|");
    }
    if (rel.spec.is_identity) {
      ++identities;
      identity_id_ = k;
      if (!(rel.matrix == SparseMatrix::identity(n))) throw SchemaError("identity relation matrix is not I");
      continue;
    }
    const std::size_t st = table_.type_index(rel.spec.src_type);
    const std::size_t dt = table_.type_index(rel.spec.dst_type);
    const std::size_t r0 = table_.offset(st), r1 = r0 + table_.count(st);
    const std::size_t c0 = table_.offset(dt), c1 = c0 + table_.count(dt);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t p = rel.matrix.row_ptr()[r]; p < rel.matrix.row_ptr()[r + 1]; ++p) {
        const std::size_t c = rel.matrix.col_idx()[p];
        if (r < r0 || r >= r1 || c < c0 || c >= c1) {
          throw SchemaError("relation '" + rel.spec.name + "' has entry (" + std::to_string(r) + "," +
                            std::to_string(c) + ") outside its type block");
        }
      }
    }
    if (rel.spec.symmetric && !rel.matrix.is_symmetric()) {
      throw SchemaError("relation '" + rel.spec.name + "' is declared symmetric but is not");
    }
  }
  if (identities != 1) throw SchemaError("exactly one identity relation is required");
}

std::optional<std::size_t> HetGraph::find_relation(const std::string& name) const {
  for (const auto& r : relations_) {
    if (r.spec.name == name) return r.spec.id;
  }
  return std::nullopt;
}

std::size_t HetGraph::relation_id(const std::string& name) const {
  if (auto id = find_relation(name)) return *id;
  throw SchemaError("unknown relation '" + name + "'");
}

bool HetGraph::accepts(std::size_t rel, std::size_t type) const {
  const RelationSpec& s = relations_.at(rel).spec;
  return s.is_identity || table_.type_index(s.src_type) == type;
}

std::size_t HetGraph::step_type(std::size_t rel, std::size_t type) const {
  const RelationSpec& s = relations_.at(rel).spec;
  return s.is_identity ? type : table_.type_index(s.dst_type);
}

HetGraph build_relation_set(const NodeTypeTable& table, const std::vector<BaseRelation>& base) {
  const std::size_t n = table.num_nodes();
  std::size_t duplicates = 0;

  struct Block {
    std::size_t r0, r1, c0, c1;
  };
  auto block_of = [&](const BaseRelation& b) {
    const std::size_t st = table.type_index(b.src_type);
    const std::size_t dt = table.type_index(b.dst_type);
    return Block{table.offset(st), table.offset(st) + table.count(st), table.offset(dt),
                 table.offset(dt) + table.count(dt)};
  };

  // Binary adjacency: duplicates collapse to weight 1.
  auto binary = [&](const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::set<std::pair<std::size_t, std::size_t>> unique;
    for (const auto& e : edges) {
      if (!unique.insert(e).second) ++duplicates;
    }
    std::vector<Triplet> t;
    t.reserve(unique.size());
    for (const auto& [r, c] : unique) t.push_back({r, c, 1.0});
    return SparseMatrix::from_triplets(n, n, std::move(t));
  };

  std::set<std::string> names;
  for (const auto& b : base) {
    if (!names.insert(b.name).second) throw SchemaError("duplicate relation name '" + b.name + "'");
    const Block blk = block_of(b);
    for (const auto& [u, v] : b.edges) {
      if (u < blk.r0 || u >= blk.r1 || v < blk.c0 || v >= blk.c1) {
        throw SchemaError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") of relation '" + b.name +
                          "' lies outside the " + b.src_type + "-" + b.dst_type + " block");
      }
    }
  }

  std::vector<Relation> rels;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const BaseRelation& b = base[i];
    if (b.src_type != b.dst_type) continue;
    std::vector<std::pair<std::size_t, std::size_t>> sym;
    sym.reserve(b.edges.size());
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [u, v] : b.edges) {
      if (u > v) std::swap(u, v);
      if (!seen.insert({u, v}).second) {
        ++duplicates;
        continue;
      }
      sym.emplace_back(u, v);
      if (u != v) sym.emplace_back(v, u);
    }
    RelationSpec spec{rels.size(), b.name, b.src_type, b.dst_type, false, true, i, false};
    rels.push_back({spec, binary(sym)});
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    const BaseRelation& b = base[i];
    if (b.src_type == b.dst_type) continue;
    SparseMatrix fwd = binary(b.edges);
    SparseMatrix bwd = fwd.transpose();
    std::string tname = b.dst_type + "-" + b.src_type;
    if (names.count(tname)) tname = b.name + "^T";
    rels.push_back({RelationSpec{rels.size(), b.name, b.src_type, b.dst_type, false, false, i, false}, std::move(fwd)});
    rels.push_back({RelationSpec{rels.size(), tname, b.dst_type, b.src_type, false, false, i, true}, std::move(bwd)});
  }
  rels.push_back({RelationSpec{rels.size(), "identity", "", "", true, true, std::nullopt, false},
                  SparseMatrix::identity(n)});
  return HetGraph(table, std::move(rels), duplicates);
}

namespace {

// Walks the sequence at the type level; returns the start type if pinned.
std::optional<std::size_t> check_sequence(const HetGraph& g, const std::vector<std::size_t>& relations) {
  std::optional<std::size_t> start, current;
  for (std::size_t step = 0; step < relations.size(); ++step) {
    const std::size_t rel = relations[step];
    if (rel >= g.num_relations()) throw SchemaError("relation id " + std::to_string(rel) + " out of range");
    const RelationSpec& s = g.relation(rel).spec;
    if (s.is_identity) continue;
    const std::size_t src = g.node_table().type_index(s.src_type);
    if (current && *current != src) {
      throw SchemaError("relation sequence is not type-compatible at step " + std::to_string(step) + " ('" +
                        s.name + "' starts at " + s.src_type + ")");
    }
    if (!start) start = src;
    current = g.node_table().type_index(s.dst_type);
  }
  return start;
}

}  // namespace

double path_count_oracle(const HetGraph& g, const std::vector<std::size_t>& relations, std::size_t src,
                         std::size_t dst) {
  check_sequence(g, relations);
  const std::size_t n = g.num_nodes();
  if (src >= n || dst >= n) throw SchemaError("path_count_oracle: node out of range");

  // adjacency lists per relation in the sequence
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> adj(relations.size());
  for (std::size_t s = 0; s < relations.size(); ++s) {
    const Relation& rel = g.relation(relations[s]);
    if (rel.spec.is_identity) continue;
    auto& lists = adj[s];
    lists.resize(n);
    const SparseMatrix& m = rel.matrix;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t p = m.row_ptr()[r]; p < m.row_ptr()[r + 1]; ++p) {
        lists[r].emplace_back(m.col_idx()[p], m.values()[p]);
      }
    }
  }

  double total = 0.0;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t step, std::size_t node,
                                                                   double weight) {
    if (step == relations.size()) {
      if (node == dst) total += weight;
      return;
    }
    if (g.relation(relations[step]).spec.is_identity) {
      walk(step + 1, node, weight);
      return;
    }
    for (const auto& [next, w] : adj[step][node]) walk(step + 1, next, weight * w);
  };
  walk(0, src, 1.0);
  return total;
}

std::vector<std::vector<std::size_t>> enumerate_schema_metapaths(const HetGraph& g, const std::string& from_type,
                                                                 const std::string& to_type, std::size_t max_len) {
  if (max_len < 1) throw SchemaError("enumerate_schema_metapaths: max_len must be >= 1");
  const std::size_t from = g.node_table().type_index(from_type);
  const std::size_t to = g.node_table().type_index(to_type);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> seq;
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::function<void(std::size_t)> extend = [&](std::size_t type) {
      if (seq.size() == len) {
        if (type == to) out.push_back(seq);
        return;
      }
      for (std::size_t k = 0; k < g.num_relations(); ++k) {
        const RelationSpec& s = g.relation(k).spec;
        if (s.is_identity || !g.accepts(k, type)) continue;
        seq.push_back(k);
        extend(g.step_type(k, type));
        seq.pop_back();
      }
    };
    extend(from);
  }
  return out;
}

SparseMatrix compose_relations(const HetGraph& g, const std::vector<std::size_t>& relations) {
  check_sequence(g, relations);
  SparseMatrix acc = SparseMatrix::identity(g.num_nodes());
  for (std::size_t rel : relations) acc = spmm(acc, g.relation(rel).matrix);
  return acc;
}

std::string describe_sequence(const HetGraph& g, const std::vector<std::size_t>& relations) {
  std::string out;
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (i) out += " > ";
    out += g.relation(relations[i]).spec.name;
  }
  return out;
}

}  // namespace hampdti
