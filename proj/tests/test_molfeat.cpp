#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "hampdti/error.hpp"
#include "hampdti/molfeat/encoders.hpp"
#include "hampdti/molfeat/features.hpp"
#include "hampdti/molfeat/smiles.hpp"
#include "hampdti/tensor/ops.hpp"
#include "hampdti/tensor/optim.hpp"
#include "smiles_gen.hpp"
#include "test_util.hpp"

using namespace hampdti;
using namespace hampdti::molfeat;
using namespace testutil;

namespace {

std::size_t hot_index(const AtomFeatureVector& v, std::size_t begin, std::size_t width) {
  for (std::size_t k = 0; k < width; ++k)
    if (v[begin + k] == 1.0) return k;
  return width;
}

double segment_sum(const AtomFeatureVector& v, std::size_t begin, std::size_t width) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin),
                         v.begin() + static_cast<std::ptrdiff_t>(begin + width), 0.0);
}

// Two passes: count each group, then walk again and note the position at which
// the running count hits each target.
std::vector<double> slow_ctd(const std::string& seq) {
  static const char* kGroups[7][3] = {
      {"RKEDQN", "GASTPHY", "CLVIMFW"},  {"GASTPDC", "NVEQIL", "MHKFRYW"}, {"LIFWCMVY", "PGAST", "HQRKNED"},
      {"GASDT", "CPNVEQIL", "KMHFRYW"},  {"KR", "ANCQGHILMFPSTWYV", "DE"}, {"EALMQKRH", "VIYCWFT", "GNPSD"},
      {"ALFCGIVW", "RKQEND", "MPSHTY"}};
  std::vector<double> out;
  const double n = static_cast<double>(seq.size());
  for (int a = 0; a < 7; ++a) {
    auto grp = [&](char r) {
      for (int g = 0; g < 3; ++g)
        if (std::string(kGroups[a][g]).find(r) != std::string::npos) return g;
      return -1;
    };
    int cnt[3] = {0, 0, 0};
    for (char r : seq) cnt[grp(r)]++;
    for (int g = 0; g < 3; ++g) out.push_back(cnt[g] / n);
    int t[3] = {0, 0, 0};
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const int x = grp(seq[i]), y = grp(seq[i + 1]);
      if ((x == 0 && y == 1) || (x == 1 && y == 0)) t[0]++;
      if ((x == 0 && y == 2) || (x == 2 && y == 0)) t[1]++;
      if ((x == 1 && y == 2) || (x == 2 && y == 1)) t[2]++;
    }
    const int crossings = t[0] + t[1] + t[2];
    for (int k = 0; k < 3; ++k) out.push_back(crossings ? static_cast<double>(t[k]) / crossings : 0.0);
    for (int g = 0; g < 3; ++g) {
      if (cnt[g] == 0) {
        out.insert(out.end(), 5, 0.0);
        continue;
      }
      const int targets[5] = {1, std::max(1, cnt[g] / 4), std::max(1, cnt[g] / 2), std::max(1, cnt[g] * 3 / 4),
                              cnt[g]};
      for (int target : targets) {
        int seen = 0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
          if (grp(seq[i]) == g && ++seen == target) {
            out.push_back(static_cast<double>(i + 1) / n * 100.0);
            break;
          }
        }
      }
    }
  }
  return out;
}

std::string random_protein(Rng& rng, std::size_t len) {
  static const std::string kResidues = "ACDEFGHIKLMNPQRSTVWY";
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += kResidues[rng.below(kResidues.size())];
  return s;
}

// Dense reference for one GCN layer stack plus max pool.
Matrix dense_encode(const MoleculeGraph& g, const std::vector<Matrix>& ws) {
  const std::size_t q = g.atoms.size();
  Matrix a = Matrix::identity(q);
  for (const Bond& b : g.bonds) a(b.a, b.b) = a(b.b, b.a) = 1.0;
  std::vector<double> deg(q, 0.0);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  Matrix h = atom_feature_matrix(g);
  for (const Matrix& w : ws) {
    h = naive_matmul(a, naive_matmul(h, w));
    for (double& v : h.data) v = std::max(0.0, v);
  }
  Matrix out(1, h.cols, -1e300);
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j) out(0, j) = std::max(out(0, j), h(i, j));
  return out;
}

}  // namespace

TEST_CASE("smiles: methane") {
  const auto g = parse_smiles("C");
  REQUIRE(g.atoms.size() == 1);
  CHECK(g.degree(0) == 0);
  CHECK(g.atoms[0].implicit_h == 4);
  CHECK_FALSE(g.atoms[0].aromatic);
}

TEST_CASE("smiles: benzene") {
  const auto g = parse_smiles("c1ccccc1");
  REQUIRE(g.atoms.size() == 6);
  CHECK(g.bonds.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(g.atoms[i].aromatic);
    CHECK(g.degree(i) == 2);
    CHECK(g.atoms[i].implicit_h == 1);
  }
}

TEST_CASE("smiles: valence rules") {
  CHECK(parse_smiles("O").atoms[0].implicit_h == 2);
  CHECK(parse_smiles("N").atoms[0].implicit_h == 3);
  CHECK(parse_smiles("Cl").atoms[0].implicit_h == 1);
  CHECK(parse_smiles("B").atoms[0].implicit_h == 3);
  // ethene, acetylene
  CHECK(parse_smiles("C=C").atoms[0].implicit_h == 2);
  CHECK(parse_smiles("C#C").atoms[0].implicit_h == 1);
  // sulfur steps up through 2/4/6
  CHECK(parse_smiles("CS(=O)(=O)C").atoms[1].implicit_h == 0);
  CHECK(parse_smiles("CS(=O)C").atoms[1].implicit_h == 0);
  // phosphorus 5
  CHECK(parse_smiles("P(=O)(O)(O)O").atoms[0].implicit_h == 0);
  // pyrrole nitrogen written explicitly
  const auto pyrrole = parse_smiles("c1cc[nH]c1");
  CHECK(pyrrole.atoms[3].explicit_h == 1);
  CHECK(pyrrole.total_h(3) == 1);
  CHECK(pyrrole.atoms[0].implicit_h == 1);
}

TEST_CASE("smiles: bracket atoms") {
  const auto g = parse_smiles("[13CH3-:2]");
  REQUIRE(g.atoms.size() == 1);
  CHECK(g.atoms[0].isotope == 13);
  CHECK(g.atoms[0].explicit_h == 3);
  CHECK(g.atoms[0].charge == -1);
  CHECK(g.atoms[0].implicit_h == 0);
  CHECK(parse_smiles("[Fe+2]").atoms[0].charge == 2);
  CHECK(parse_smiles("[Fe+++]").atoms[0].charge == 3);
  CHECK(parse_smiles("[Cl]").atoms[0].implicit_h == 0);
}

TEST_CASE("smiles: branches, rings, components") {
  const auto g = parse_smiles("CC(C)(C)C");
  CHECK(g.degree(1) == 4);
  const auto r = parse_smiles("C%12CCCC%12");
  CHECK(r.bonds.size() == 5);
  const auto salt = parse_smiles("[Na+].[Cl-]");
  CHECK(salt.atoms.size() == 2);
  CHECK(salt.bonds.empty());
  CHECK(salt.components == 2);
  const auto stereo = parse_smiles("F/C=C/F");
  CHECK(stereo.bonds.size() == 3);
}

TEST_CASE("smiles: errors carry offsets") {
  auto offset_of = [](const char* s) -> std::size_t {
    try {
      parse_smiles(s);
    } catch (const ParseError& e) {
      return e.offset();
    }
    FAIL("no error for " << s);
    return 0;
  };
  CHECK_THROWS_AS(parse_smiles("C("), ParseError);
  CHECK(offset_of("C(") == 1);
  CHECK_THROWS_AS(parse_smiles("C1CC"), ParseError);
  CHECK_THROWS_AS(parse_smiles("C)"), ParseError);
  CHECK(offset_of("CCX") == 2);
  CHECK_THROWS_AS(parse_smiles("*C"), ParseError);
  CHECK_THROWS_AS(parse_smiles(""), ParseError);
  CHECK_THROWS_AS(parse_smiles("C=="), ParseError);
  CHECK_THROWS_AS(parse_smiles("[C"), ParseError);
  CHECK_THROWS_AS(parse_smiles("C11"), ParseError);
  CHECK_THROWS_AS(parse_smiles("C%1"), ParseError);
}

TEST_CASE("smiles: generated strings always parse") {
  SmilesGenerator gen(7);
  for (int i = 0; i < 2000; ++i) {
    const std::string s = gen.next();
    INFO(s);
    MoleculeGraph g;
    REQUIRE_NOTHROW(g = parse_smiles(s));
    for (const Bond& b : g.bonds) CHECK((b.a < g.atoms.size() && b.b < g.atoms.size() && b.a != b.b));
    for (const Atom& a : g.atoms) CHECK(a.implicit_h >= 0);
  }
}

TEST_CASE("smiles: mutated strings fail cleanly") {
  SmilesGenerator gen(11);
  Rng rng(5);
  const std::string junk = "()[]%=#123456789*$?!Xx ";
  int errors = 0;
  for (int i = 0; i < 2000; ++i) {
    std::string s = gen.next();
    s[rng.below(s.size())] = junk[rng.below(junk.size())];
    try {
      parse_smiles(s);
    } catch (const ParseError& e) {
      CHECK(e.offset() <= s.size());
      ++errors;
    }
  }
  CHECK(errors > 0);
}

TEST_CASE("features: methane and benzene") {
  const auto m = atom_features(parse_smiles("C"));
  REQUIRE(m.size() == 1);
  CHECK(hot_index(m[0], 0, kElementSlots) == 0);
  CHECK(hot_index(m[0], kDegreeOffset, kCountSlots) == 0);
  CHECK(hot_index(m[0], kTotalHOffset, kCountSlots) == 4);
  CHECK(hot_index(m[0], kImplicitHOffset, kCountSlots) == 4);
  CHECK(m[0][kAromaticOffset] == 0.0);

  for (const auto& v : atom_features(parse_smiles("c1ccccc1"))) {
    CHECK(v[kAromaticOffset] == 1.0);
    CHECK(hot_index(v, kDegreeOffset, kCountSlots) == 2);
  }
}

TEST_CASE("features: vocabulary and other bucket") {
  CHECK(kElementVocabulary.size() + 1 == kElementSlots);
  for (std::size_t i = 0; i < kElementVocabulary.size(); ++i) CHECK(element_slot(kElementVocabulary[i]) == i);
  CHECK(element_slot("U") == kElementSlots - 1);
  const auto v = atom_features(parse_smiles("[U]"));
  CHECK(hot_index(v[0], 0, kElementSlots) == kElementSlots - 1);
  // sulfur hexafluoride: degree 6
  CHECK(hot_index(atom_features(parse_smiles("FS(F)(F)(F)(F)F"))[1], kDegreeOffset, kCountSlots) == 6);
}

TEST_CASE("features: segments exact on generated molecules") {
  SmilesGenerator gen(3);
  for (int i = 0; i < 500; ++i) {
    const auto g = parse_smiles(gen.next());
    const auto feats = atom_features(g);
    REQUIRE(feats.size() == g.atoms.size());
    for (const auto& v : feats) {
      CHECK(v.size() == 78);
      CHECK(segment_sum(v, 0, kElementSlots) == 1.0);
      CHECK(segment_sum(v, kDegreeOffset, kCountSlots) == 1.0);
      CHECK(segment_sum(v, kTotalHOffset, kCountSlots) == 1.0);
      CHECK(segment_sum(v, kImplicitHOffset, kCountSlots) == 1.0);
      CHECK((v[kAromaticOffset] == 0.0 || v[kAromaticOffset] == 1.0));
    }
  }
}

TEST_CASE("features: permutation equivariant") {
  // Same molecule written from two starting atoms: ethanol.
  const auto a = atom_features(parse_smiles("CCO"));
  const auto b = atom_features(parse_smiles("OCC"));
  CHECK(a[0] == b[2]);
  CHECK(a[1] == b[1]);
  CHECK(a[2] == b[0]);
}

TEST_CASE("ctd: homopolymer") {
  const std::string seq(8, 'A');
  const auto v = ctd_features(seq);
  CHECK(v.size() == 147);
  for (std::size_t a = 0; a < kCtdAttributes; ++a) {
    const int g = ctd_group(a, 'A');
    const double* f = v.data() + a * kCtdPerAttribute;
    for (int k = 0; k < 3; ++k) CHECK(f[k] == (k == g ? 1.0 : 0.0));
    for (int k = 3; k < 6; ++k) CHECK(f[k] == 0.0);
    const double* d = f + 6 + 5 * g;
    CHECK(d[0] == doctest::Approx(100.0 / 8));
    CHECK(d[4] == 100.0);
  }
}

TEST_CASE("ctd: matches slow counter") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::string seq = random_protein(rng, trial == 0 ? 50 : 1 + rng.below(80));
    const auto fast = ctd_features(seq);
    const auto slow = slow_ctd(seq);
    REQUIRE(slow.size() == 147);
    for (std::size_t i = 0; i < 147; ++i) CHECK(fast[i] == slow[i]);
  }
}

TEST_CASE("ctd: invariants") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string seq = random_protein(rng, 1 + rng.below(300));
    const auto v = ctd_features(seq);
    for (std::size_t a = 0; a < kCtdAttributes; ++a) {
      const double* f = v.data() + a * kCtdPerAttribute;
      CHECK(std::abs(f[0] + f[1] + f[2] - 1.0) < 1e-9);
      const double t = f[3] + f[4] + f[5];
      const bool one_group = f[0] == 1.0 || f[1] == 1.0 || f[2] == 1.0;
      if (seq.size() > 1 && !one_group) CHECK(std::abs(t - 1.0) < 1e-9);
      else CHECK(t == 0.0);
      for (int g = 0; g < 3; ++g)
        for (int q = 0; q < 5; ++q) {
          const double d = f[6 + 5 * g + q];
          CHECK(d >= 0.0);
          CHECK(d <= 100.0);
          if (q) CHECK(d >= f[6 + 5 * g + q - 1]);
        }
    }
  }
}

TEST_CASE("ctd: ambiguous residues and errors") {
  CHECK(ctd_features("B") == ctd_features("D"));
  CHECK(ctd_features("z") == ctd_features("E"));
  for (std::size_t a = 0; a < kCtdAttributes; ++a) CHECK(ctd_group(a, 'X') == 1);
  CHECK_THROWS_AS(ctd_features(""), ParseError);
  CHECK_THROWS_AS(ctd_features("AC1"), ParseError);
}

TEST_CASE("encoder: single atom, identity layer") {
  const auto mol = prepare_molecule(parse_smiles("N"));
  Rng rng(1);
  DrugEncoder enc({78, 78}, rng);
  enc.weights()[0].mutable_value() = Matrix::identity(78);
  tensor::Tape tape;
  const Matrix out = enc.encode(tape, mol).value();
  // normalized adjacency of a lone atom with its self-loop is exactly 1
  CHECK(out == mol.features);
}

TEST_CASE("encoder: dense oracle and permutation invariance") {
  Rng rng(9);
  DrugEncoder enc({78, 16, 8, 5}, rng);
  std::vector<Matrix> ws;
  for (const auto& w : enc.params()) ws.push_back(w.value());
  const char* pairs[][2] = {{"CCO", "OCC"}, {"CC(N)C=O", "O=CC(N)C"}, {"c1ccncc1", "n1ccccc1"}};
  for (const auto& p : pairs) {
    const auto ga = parse_smiles(p[0]);
    tensor::Tape tape;
    const Matrix a = enc.encode(tape, prepare_molecule(ga)).value();
    const Matrix b = enc.encode(tape, prepare_molecule(parse_smiles(p[1]))).value();
    CHECK(max_abs_diff(a, dense_encode(ga, ws)) < 1e-12);
    CHECK(max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("encoder: exact permutation invariance") {
  // Same string, atom rows shuffled after parsing.
  auto g = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  Rng rng(2);
  std::vector<std::size_t> perm(g.atoms.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  MoleculeGraph h;
  h.atoms.resize(g.atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i) h.atoms[perm[i]] = g.atoms[i];
  for (const Bond& b : g.bonds) h.bonds.push_back({perm[b.a], perm[b.b], b.order});
  DrugEncoder enc({78, 12, 6}, rng);
  tensor::Tape tape;
  const Matrix a = enc.encode(tape, prepare_molecule(g)).value();
  const Matrix b = enc.encode(tape, prepare_molecule(h)).value();
  // max pool is order free; the per-row sums differ only in summation order
  CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("protein transform") {
  Rng rng(3);
  auto mlp = make_protein_transform({147, 20, 7}, rng);
  tensor::Tape tape;
  const Matrix zero(3, 147);
  for (auto& w : mlp.weights()) w.mutable_value().fill(0.0);
  CHECK(frobenius_norm(protein_transform(tape, tensor::Tensor::constant(zero), mlp).value()) == 0.0);

  auto single = tensor::Mlp("p", {147, 147}, tensor::Activation::relu, tensor::Activation::relu, false, rng);
  single.weights()[0].mutable_value() = Matrix::identity(147);
  const Matrix x = random_dense(4, 147, rng, 0.0, 1.0);
  CHECK(single.forward(tape, tensor::Tensor::constant(x)).value() == x);

  auto rand_mlp = make_protein_transform({147, 9, 5}, rng);
  const Matrix w0 = rand_mlp.weights()[0].value(), w1 = rand_mlp.weights()[1].value();
  const Matrix b0 = rand_mlp.biases()[0].value(), b1 = rand_mlp.biases()[1].value();
  auto layer = [](Matrix h, const Matrix& b) {
    for (std::size_t i = 0; i < h.rows; ++i)
      for (std::size_t j = 0; j < h.cols; ++j) h(i, j) = std::max(0.0, h(i, j) + b(0, j));
    return h;
  };
  const Matrix expect = layer(naive_matmul(layer(naive_matmul(x, w0), b0), w1), b1);
  CHECK(max_abs_diff(protein_transform(tape, tensor::Tensor::constant(x), rand_mlp).value(), expect) < 1e-12);
}

namespace {

struct ToySet {
  std::vector<PreparedMolecule> drugs;
  Matrix ctd;
  Matrix labels;
};

// 8 drugs, 6 proteins; interactions from a rank-2 block pattern.
ToySet planted_toy() {
  const char* smiles[] = {"CCO", "CCN", "CCCO", "CC(C)O", "c1ccccc1", "c1ccncc1", "c1ccc(O)cc1", "c1cc[nH]c1"};
  const char* seqs[] = {"KRKRKRDEDEKR", "RKEDQNRKEDKR", "KKRRDDEEKRKR",
                        "LIVFMWCLIVFM", "FWLIVMCAGLIV", "GAVLIFMWCGAV"};
  ToySet t;
  for (const char* s : smiles) t.drugs.push_back(prepare_molecule(parse_smiles(s)));
  t.ctd = ctd_matrix({seqs, seqs + 6});
  t.labels = Matrix(8, 6);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 6; ++j) t.labels(i, j) = ((i < 4) == (j < 3)) ? 1.0 : 0.0;
  return t;
}

double roc_auc_pairs(const Matrix& s, const Matrix& y) {
  double num = 0, den = 0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      if (y.data[a] == 1.0 && y.data[b] == 0.0) {
        den += 1;
        num += s.data[a] > s.data[b] ? 1.0 : (s.data[a] == s.data[b] ? 0.5 : 0.0);
      }
  return num / den;
}

}  // namespace

TEST_CASE("pretrain: planted toy converges and is deterministic") {
  const ToySet t = planted_toy();
  PretrainConfig cfg;
  cfg.dim = 16;
  cfg.drug_hidden = {24};
  cfg.protein_hidden = {24};
  cfg.epochs = 300;
  cfg.lr = 1e-2;
  cfg.seed = 5;
  const Matrix mask(8, 6, 1.0);
  const auto r1 = pretrain_features(t.drugs, t.ctd, t.labels, mask, cfg);
  const Matrix scores = naive_matmul(r1.drug_features, r1.protein_features.transposed());
  CHECK(roc_auc_pairs(scores, t.labels) > 0.95);
  CHECK(r1.loss_history.back() < r1.loss_history.front());

  const auto r2 = pretrain_features(t.drugs, t.ctd, t.labels, mask, cfg);
  CHECK(r1.drug_features == r2.drug_features);
  CHECK(r1.protein_features == r2.protein_features);
  CHECK(r1.loss_history == r2.loss_history);
}

TEST_CASE("pretrain: masked entries do not matter") {
  const ToySet t = planted_toy();
  PretrainConfig cfg;
  cfg.dim = 6;
  cfg.drug_hidden = {8};
  cfg.protein_hidden = {8};
  cfg.epochs = 5;
  Matrix mask(8, 6, 1.0);
  mask(0, 0) = mask(7, 5) = 0.0;
  Matrix flipped = t.labels;
  flipped(0, 0) = 1.0 - flipped(0, 0);
  flipped(7, 5) = 1.0 - flipped(7, 5);
  const auto a = pretrain_features(t.drugs, t.ctd, t.labels, mask, cfg);
  const auto b = pretrain_features(t.drugs, t.ctd, flipped, mask, cfg);
  CHECK(a.drug_features == b.drug_features);
}

TEST_CASE("pretrain: stage-1 gradients pass grad_check") {
  const ToySet t = planted_toy();
  PretrainConfig cfg;
  cfg.dim = 4;
  cfg.drug_hidden = {5};
  cfg.protein_hidden = {6};
  const FeatureModel model = make_feature_model(cfg);
  const auto ctd = tensor::Tensor::constant(scale_ctd(t.ctd));
  const Matrix mask(8, 6, 1.0);
  const auto res = tensor::grad_check(
      [&](tensor::Tape& tape) { return stage1_loss(tape, model, t.drugs, ctd, t.labels, mask, 0.4); },
      model.params(), 1e-5, 40, 1);
  CHECK(res.max_rel_error < 1e-4);
  // a dead network would pass with every gradient zero
  CHECK((res.worst_analytic != 0.0 || res.worst_numeric != 0.0));
}

TEST_CASE("pretrain: loss zero on perfect scores") {
  Matrix y(2, 2);
  y(0, 1) = 1.0;
  tensor::Tape tape;
  const auto l = tensor::masked_weighted_sq_loss(tape, tensor::Tensor::constant(y), y, Matrix(2, 2, 1.0), 0.5);
  CHECK(l.item() == 0.0);
}

TEST_CASE("pretrain: shape errors") {
  const ToySet t = planted_toy();
  CHECK_THROWS_AS(pretrain_features(t.drugs, t.ctd, Matrix(3, 6), Matrix(3, 6), {}), ShapeError);
}
