#include "hampdti/harness/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hampdti/error.hpp"
#include "hampdti/random.hpp"

namespace hampdti {

namespace fs = std::filesystem;

NodeTypeTable Dataset::table() const {
  std::vector<std::size_t> counts;
  for (const auto& v : ids) counts.push_back(v.size());
  return NodeTypeTable(types, counts);
}

std::size_t Dataset::dti_index() const {
  for (std::size_t i = 0; i < relations.size(); ++i)
    if (relations[i].name == dti_relation) return i;
  throw SchemaError("dataset has no relation '" + dti_relation + "'");
}

Matrix Dataset::labels() const {
  const std::size_t m = num_drugs();
  Matrix y(m, num_proteins());
  for (const auto& [u, v] : relations[dti_index()].edges) y(u, v - m) = 1.0;
  return y;
}

HetGraph Dataset::graph() const { return build_relation_set(table(), relations); }

HetGraph Dataset::graph_with_dti(const Matrix& train_positive) const {
  const std::size_t m = num_drugs();
  if (train_positive.rows != m || train_positive.cols != num_proteins()) {
    throw ShapeError("training mask must be (#drugs x #proteins)");
  }
  std::vector<BaseRelation> rels = relations;
  auto& dti = rels[dti_index()].edges;
  std::erase_if(dti, [&](const auto& e) { return train_positive(e.first, e.second - m) == 0.0; });
  return build_relation_set(table(), rels);
}

std::string Dataset::stats() const {
  std::ostringstream os;
  for (std::size_t t = 0; t < types.size(); ++t) os << "nodes\t" << types[t] << '\t' << ids[t].size() << '\n';
  for (const auto& r : relations) os << "edges\t" << r.name << '\t' << r.edges.size() << '\n';
  os << "duplicates\t" << duplicate_edges << '\n';
  os << "smiles\t" << smiles.size() << '\n' << "sequences\t" << sequences.size() << '\n';
  for (const auto& w : warnings) os << "warning\t" << w << '\n';
  return os.str();
}

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<Line> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  std::vector<Line> out;
  std::string text;
  for (std::size_t n = 1; std::getline(in, text); ++n) {
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream is(text);
    Line l{n, {}};
    for (std::string f; is >> f;) l.fields.push_back(f);
    if (!l.fields.empty()) out.push_back(std::move(l));
  }
  return out;
}

[[noreturn]] void fail_at(const fs::path& file, std::size_t line, const std::string& what) {
  throw IngestError(file.filename().string() + ":" + std::to_string(line) + ": " + what);
}

std::size_t parse_count(const fs::path& file, std::size_t line, const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) fail_at(file, line, "expected a count, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

Dataset ingest(const fs::path& manifest) {
  const fs::path dir = manifest.parent_path();
  Dataset ds;
  std::vector<std::unordered_map<std::string, std::size_t>> index;
  struct PendingRelation {
    std::string name, src, dst;
    fs::path file;
    std::optional<std::size_t> expected;
    std::size_t line;
  };
  std::vector<PendingRelation> pending;
  std::optional<fs::path> smiles_file, seq_file;

  for (const Line& l : read_lines(manifest)) {
    const auto& f = l.fields;
    const std::string& kind = f[0];
    if (kind == "node_type") {
      if (f.size() < 3 || f.size() > 4) fail_at(manifest, l.number, "node_type needs <name> <file> [count]");
      if (std::find(ds.types.begin(), ds.types.end(), f[1]) != ds.types.end()) {
        fail_at(manifest, l.number, "node type '" + f[1] + "' declared twice");
      }
      ds.types.push_back(f[1]);
      ds.ids.emplace_back();
      index.emplace_back();
      for (const Line& id : read_lines(dir / f[2])) {
        if (!index.back().emplace(id.fields[0], ds.ids.back().size()).second) {
          fail_at(dir / f[2], id.number, "duplicate id '" + id.fields[0] + "'");
        }
        ds.ids.back().push_back(id.fields[0]);
      }
      if (f.size() == 4) {
        const std::size_t want = parse_count(manifest, l.number, f[3]);
        if (want != ds.ids.back().size()) {
          fail_at(manifest, l.number, "node type '" + f[1] + "' has " + std::to_string(ds.ids.back().size()) +
                                          " ids, manifest expects " + std::to_string(want));
        }
      }
    } else if (kind == "relation") {
      if (f.size() < 5 || f.size() > 6) fail_at(manifest, l.number, "relation needs <name> <src> <dst> <file> [edges]");
      pending.push_back({f[1], f[2], f[3], dir / f[4],
                         f.size() == 6 ? std::optional(parse_count(manifest, l.number, f[5])) : std::nullopt, l.number});
    } else if (kind == "dti") {
      if (f.size() != 2) fail_at(manifest, l.number, "dti needs <relation name>");
      ds.dti_relation = f[1];
    } else if (kind == "smiles" || kind == "sequences") {
      if (f.size() != 2) fail_at(manifest, l.number, kind + " needs <file>");
      (kind == "smiles" ? smiles_file : seq_file) = dir / f[1];
    } else {
      fail_at(manifest, l.number, "unknown manifest entry '" + kind + "'");
    }
  }
  if (ds.types.size() < 2) throw IngestError("manifest must declare the drug and protein node types first");
  for (std::size_t t = 0; t < ds.types.size(); ++t) {
    if (ds.ids[t].empty()) throw IngestError("node type '" + ds.types[t] + "' has no ids");
  }
  const NodeTypeTable table = ds.table();

  for (const auto& p : pending) {
    const auto src = table.find_type(p.src), dst = table.find_type(p.dst);
    if (!src || !dst) fail_at(manifest, p.line, "relation '" + p.name + "' uses an undeclared node type");
    BaseRelation rel{p.name, p.src, p.dst, {}};
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Line& e : read_lines(p.file)) {
      if (e.fields.size() < 2) fail_at(p.file, e.number, "edge line needs two ids");
      auto lookup = [&](std::size_t type, const std::string& id) {
        const auto it = index[type].find(id);
        if (it == index[type].end()) fail_at(p.file, e.number, "unknown " + ds.types[type] + " id '" + id + "'");
        return table.offset(type) + it->second;
      };
      auto edge = std::pair(lookup(*src, e.fields[0]), lookup(*dst, e.fields[1]));
      if (*src == *dst && edge.first > edge.second) std::swap(edge.first, edge.second);
      if (!seen.insert(edge).second) {
        ++ds.duplicate_edges;
        continue;
      }
      rel.edges.push_back(edge);
    }
    if (rel.edges.empty()) ds.warnings.push_back("relation '" + p.name + "' is empty");
    if (p.expected && *p.expected != rel.edges.size()) {
      fail_at(manifest, p.line, "relation '" + p.name + "' has " + std::to_string(rel.edges.size()) +
                                    " distinct edges, manifest expects " + std::to_string(*p.expected));
    }
    ds.relations.push_back(std::move(rel));
  }
  const auto& dti = ds.relations.at(ds.dti_index());
  if (dti.src_type != ds.types[0] || dti.dst_type != ds.types[1]) {
    throw IngestError("dti relation must run from '" + ds.types[0] + "' to '" + ds.types[1] + "'");
  }

  auto read_table = [&](const fs::path& file, std::size_t type, std::vector<std::string>& out) {
    out.assign(ds.ids[type].size(), {});
    std::vector<bool> have(out.size(), false);
    for (const Line& l : read_lines(file)) {
      if (l.fields.size() != 2) fail_at(file, l.number, "expected <id> <value>");
      const auto it = index[type].find(l.fields[0]);
      if (it == index[type].end()) fail_at(file, l.number, "unknown " + ds.types[type] + " id '" + l.fields[0] + "'");
      out[it->second] = l.fields[1];
      have[it->second] = true;
    }
    for (std::size_t i = 0; i < have.size(); ++i)
      if (!have[i]) throw IngestError(file.filename().string() + ": missing entry for '" + ds.ids[type][i] + "'");
  };
  if (smiles_file) read_table(*smiles_file, 0, ds.smiles);
  if (seq_file) read_table(*seq_file, 1, ds.sequences);
  // validates block placement
  (void)ds.graph();
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream man(dir / "manifest.tsv");
  man << "# hampdti dataset manifest\n";
  for (std::size_t t = 0; t < ds.types.size(); ++t) {
    const std::string file = "nodes_" + ds.types[t] + ".tsv";
    std::ofstream out(dir / file);
    for (const auto& id : ds.ids[t]) out << id << '\n';
    man << "node_type\t" << ds.types[t] << '\t' << file << '\t' << ds.ids[t].size() << '\n';
  }
  const NodeTypeTable table = ds.table();
  auto id_of = [&](std::size_t global) {
    const std::size_t t = table.type_of(global);
    return ds.ids[t][global - table.offset(t)];
  };
  for (const auto& r : ds.relations) {
    const std::string file = "edges_" + r.name + ".tsv";
    std::ofstream out(dir / file);
    for (const auto& [u, v] : r.edges) out << id_of(u) << '\t' << id_of(v) << '\n';
    man << "relation\t" << r.name << '\t' << r.src_type << '\t' << r.dst_type << '\t' << file << '\t' << r.edges.size()
        << '\n';
  }
  man << "dti\t" << ds.dti_relation << '\n';
  auto write_table = [&](const std::string& file, std::size_t type, const std::vector<std::string>& values) {
    std::ofstream out(dir / file);
    for (std::size_t i = 0; i < values.size(); ++i) out << ds.ids[type][i] << '\t' << values[i] << '\n';
  };
  if (!ds.smiles.empty()) {
    write_table("smiles.tsv", 0, ds.smiles);
    man << "smiles\tsmiles.tsv\n";
  }
  if (!ds.sequences.empty()) {
    write_table("sequences.tsv", 1, ds.sequences);
    man << "sequences\tsequences.tsv\n";
  }
}

namespace {

// Small drug-like molecules used to give synthetic drugs real structures.
const std::vector<std::string>& stock_smiles() {
  static const std::vector<std::string> s = {
      "CC(=O)Oc1ccccc1C(=O)O",         "CC(=O)Nc1ccc(O)cc1",          "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
      "CC(C)Cc1ccc(cc1)C(C)C(=O)O",    "OC(=O)c1ccccc1O",             "C1CCC(CC1)N",
      "c1ccc2c(c1)cccc2",              "CCN(CC)CC",                   "CC(C)NCC(O)COc1cccc2ccccc12",
      "COc1ccc2nc(sc2c1)N",            "O=C1NC(=O)C(N1)(c1ccccc1)c1ccccc1", "CCOC(=O)C1=CC=CC=C1N",
      "Clc1ccc(cc1)C(c1ccccc1)N1CCNCC1", "CN(C)CCCN1c2ccccc2CCc2ccccc12", "OCC1OC(O)C(O)C(O)C1O",
      "NC(Cc1ccc(O)cc1)C(=O)O",        "C[C@H](N)C(=O)O",             "FC(F)(F)c1ccc(cc1)Oc1ccccc1",
      "O=S(=O)(N)c1ccc(N)cc1",         "C1=CC=C(C=C1)C2=CC=CC=N2",    "[Na+].[O-]C(=O)c1ccccc1",
      "CC1=C(C(=O)OC1)c1ccccc1",       "Brc1ccc(cc1)C#N",             "CC(C)(C)OC(=O)N1CCCC1",
  };
  return s;
}

std::string random_sequence(Rng& rng, std::size_t len) {
  static const std::string kResidues = "ACDEFGHIKLMNPQRSTVWY";
  std::string s(len, 'A');
  for (char& c : s) c = kResidues[rng.below(kResidues.size())];
  return s;
}

std::vector<std::string> make_ids(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i + 1);
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

Dataset make_synthetic(const SynthConfig& cfg) {
  if (cfg.drugs == 0 || cfg.proteins == 0 || cfg.diseases == 0 || cfg.side_effects == 0) {
    throw ConfigError("synthetic node counts must be positive");
  }
  Rng rng = Rng::derive(cfg.seed, 0x5359);
  Dataset ds;
  ds.types = {"drug", "protein", "disease", "side_effect"};
  ds.ids = {make_ids("D", cfg.drugs), make_ids("P", cfg.proteins), make_ids("I", cfg.diseases),
            make_ids("S", cfg.side_effects)};
  const NodeTypeTable t = ds.table();
  auto noise = [&](std::size_t a, std::size_t b) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t u = 0; u < t.count(a); ++u)
      for (std::size_t v = 0; v < t.count(b); ++v) {
        if (a == b && v <= u) continue;
        if (rng.bernoulli(cfg.noise_density)) e.emplace_back(t.offset(a) + u, t.offset(b) + v);
      }
    return e;
  };
  // every disease touches a few distinct drugs and proteins
  auto attach = [&](std::size_t type, std::size_t per_disease) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t d = 0; d < cfg.diseases; ++d) {
      std::vector<std::size_t> pick(t.count(type));
      std::iota(pick.begin(), pick.end(), 0);
      rng.shuffle(pick);
      pick.resize(std::min(per_disease, pick.size()));
      std::sort(pick.begin(), pick.end());
      for (std::size_t x : pick) e.emplace_back(t.offset(type) + x, t.offset(2) + d);
    }
    std::sort(e.begin(), e.end());
    return e;
  };
  ds.relations = {
      {"drug-drug", "drug", "drug", noise(0, 0)},
      {"protein-protein", "protein", "protein", noise(1, 1)},
      {"drug-protein", "drug", "protein", {}},
      {"drug-disease", "drug", "disease", attach(0, cfg.disease_drugs)},
      {"protein-disease", "protein", "disease", attach(1, cfg.disease_proteins)},
      {"drug-side_effect", "drug", "side_effect", noise(0, 3)},
  };
  const HetGraph g = ds.graph();
  std::vector<std::size_t> seq;
  for (const auto& name : cfg.planted) {
    const std::size_t id = g.relation_id(name);
    if (g.relation(id).spec.base && ds.relations[*g.relation(id).spec.base].name == ds.dti_relation) {
      throw ConfigError("the planted path cannot use the interaction relation itself");
    }
    seq.push_back(id);
  }
  const SparseMatrix path = compose_relations(g, seq);
  auto& dti = ds.relations[2].edges;
  for (std::size_t i = 0; i < cfg.drugs; ++i)
    for (std::size_t j = 0; j < cfg.proteins; ++j)
      if (path.at(i, cfg.drugs + j) > 0.0) dti.emplace_back(i, cfg.drugs + j);
  if (dti.empty()) throw ConfigError("planted path produced no interactions");

  if (cfg.with_features) {
    const auto& stock = stock_smiles();
    for (std::size_t i = 0; i < cfg.drugs; ++i) ds.smiles.push_back(stock[rng.below(stock.size())]);
    for (std::size_t j = 0; j < cfg.proteins; ++j) ds.sequences.push_back(random_sequence(rng, 40 + rng.below(80)));
  }
  return ds;
}

}  // namespace hampdti
