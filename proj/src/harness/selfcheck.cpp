#include "hampdti/harness/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hampdti/harness/dataset.hpp"
#include "hampdti/harness/metrics.hpp"
#include "hampdti/molfeat/encoders.hpp"
#include "hampdti/molfeat/features.hpp"
#include "hampdti/molfeat/smiles.hpp"
#include "hampdti/nsgcn/nsgcn.hpp"
#include "hampdti/random.hpp"

namespace hampdti::selfcheck {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void walk(const HetGraph& g, const std::vector<std::size_t>& seq, std::size_t step, std::size_t node, double weight,
          std::vector<double>& reached) {
  if (step == seq.size()) {
    reached[node] += weight;
    return;
  }
  if (seq[step] == g.identity_id()) {
    walk(g, seq, step + 1, node, weight, reached);
    return;
  }
  const SparseMatrix& r = g.relation(seq[step]).matrix;
  const auto rp = r.row_ptr();
  for (std::size_t e = rp[node]; e < rp[node + 1]; ++e)
    walk(g, seq, step + 1, static_cast<std::size_t>(r.col_idx()[e]), weight * r.values()[e], reached);
}

Dataset random_network(Rng& rng) {
  SynthConfig sc;
  sc.drugs = 3 + rng.below(8);
  sc.proteins = 3 + rng.below(8);
  sc.diseases = 2 + rng.below(6);
  sc.side_effects = 1 + rng.below(5);
  sc.disease_drugs = 1 + rng.below(2);
  sc.disease_proteins = 1 + rng.below(2);
  sc.noise_density = 0.1 + 0.3 * rng.uniform();
  sc.with_features = false;
  sc.seed = rng.next();
  return make_synthetic(sc);
}

}  // namespace

Matrix walk_counts(const HetGraph& g, const std::vector<std::size_t>& sequence, const metapath::BlockWindow& w) {
  Matrix out(w.rows, w.cols);
  std::vector<double> reached(g.num_nodes());
  for (std::size_t i = 0; i < w.rows; ++i) {
    std::fill(reached.begin(), reached.end(), 0.0);
    walk(g, sequence, 0, w.row0 + i, 1.0, reached);
    for (std::size_t j = 0; j < w.cols; ++j) out(i, j) = reached[w.col0 + j];
  }
  return out;
}

double pairwise_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1.0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double stepwise_ap(const std::vector<double>& scores, const std::vector<double>& labels) {
  std::vector<double> cuts = scores;
  std::sort(cuts.rbegin(), cuts.rend());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double positives = 0.0;
  for (double y : labels) positives += y;
  double ap = 0.0, last_recall = 0.0;
  for (double c : cuts) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] < c) continue;
      predicted += 1.0;
      tp += labels[i];
    }
    ap += (tp / positives - last_recall) * (tp / predicted);
    last_recall = tp / positives;
  }
  return ap;
}

Summary check_compositions(std::size_t graphs, std::size_t p, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Summary s{"one-hot compositions vs walk counts"};
  Rng rng = Rng::derive(seed, 0x4f52);
  for (std::size_t n = 0; n < graphs; ++n) {
    const Dataset ds = random_network(rng);
    const HetGraph g = ds.graph();
    const auto w = metapath::type_window(g, ds.types[0], ds.types[1]);
    for (const auto& path : enumerate_schema_metapaths(g, ds.types[0], ds.types[1], p)) {
      std::vector<std::size_t> seq = path;
      seq.resize(p, g.identity_id());
      metapath::ChannelWeights alphas;
      for (std::size_t rel : seq) {
        metapath::SelectionWeights a(g.num_relations(), 0.0);
        a[rel] = 1.0;
        alphas.push_back(std::move(a));
      }
      const Matrix got = metapath::compose_weights(alphas, g, w).block;
      const Matrix want = walk_counts(g, path, w);
      for (std::size_t i = 0; i < got.data.size(); ++i)
        s.max_error = std::max(s.max_error, std::abs(got.data[i] - want.data[i]));
      ++s.cases;
    }
  }
  s.seconds = seconds_since(t0);
  return s;
}

Summary check_metrics(std::size_t sets, std::size_t max_n, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Summary s{"roc_auc / pr_auc vs pair counting and step integration"};
  Rng rng = Rng::derive(seed, 0x4d45);
  for (std::size_t k = 0; k < sets; ++k) {
    const std::size_t n = 2 + rng.below(max_n - 1);
    const bool ties = rng.bernoulli(0.5);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? std::floor(rng.uniform() * 6.0) : rng.normal();
      y[i] = rng.bernoulli(0.3 + 0.4 * rng.uniform()) ? 1.0 : 0.0;
    }
    // both classes present
    y[0] = 1.0;
    y[1] = 0.0;
    s.max_error = std::max(s.max_error, std::abs(roc_auc(x, y) - pairwise_auc(x, y)));
    s.max_error = std::max(s.max_error, std::abs(pr_auc(x, y) - stepwise_ap(x, y)));
    ++s.cases;
  }
  s.seconds = seconds_since(t0);
  return s;
}

tensor::GradCheckResult check_model_gradients(std::uint64_t seed) {
  SynthConfig sc;
  sc.drugs = 8;
  sc.proteins = 7;
  sc.diseases = 6;
  sc.side_effects = 4;
  sc.disease_drugs = 2;
  sc.disease_proteins = 2;
  sc.noise_density = 0.3;
  sc.with_features = false;
  sc.seed = seed;
  const Dataset ds = make_synthetic(sc);
  const HetGraph g = ds.graph();
  const auto w = metapath::type_window(g, ds.types[0], ds.types[1]);
  Rng rng = Rng::derive(seed, 0x4743);
  const std::size_t d = 4;
  Matrix xu(sc.drugs, d), xs(sc.proteins, d), mask(sc.drugs, sc.proteins);
  for (double& v : xu.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : xs.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : mask.data) v = rng.bernoulli(0.7) ? 1.0 : 0.0;
  const Matrix y = ds.labels();
  const auto in = nsgcn::make_inputs(g, w, xu, xs, y, mask);
  nsgcn::ModelConfig mc;
  mc.dim = 3;
  mc.hidden = {5};
  mc.channels = 2;
  mc.length = 3;
  mc.steps = 2;
  mc.selection_init = 1.0;
  mc.seed = seed;
  const nsgcn::Model model(mc, d, d, g.num_relations());
  return tensor::grad_check([&](tensor::Tape& tape) { return model.loss(tape, in, y, mask); }, model.params(), 1e-5);
}

tensor::GradCheckResult check_feature_gradients(std::uint64_t seed) {
  std::vector<molfeat::PreparedMolecule> mols;
  for (const char* s : {"CCO", "c1ccccc1O", "CC(=O)N", "C1CC1Cl"})
    mols.push_back(molfeat::prepare_molecule(molfeat::parse_smiles(s)));
  Rng rng = Rng::derive(seed, 0x4646);
  const char* aa = "ACDEFGHIKLMNPQRSTVWY";
  std::vector<std::string> seqs;
  for (int i = 0; i < 3; ++i) {
    std::string s;
    for (std::size_t k = 0, n = 12 + rng.below(10); k < n; ++k) s += aa[rng.below(20)];
    seqs.push_back(s);
  }
  Matrix y(mols.size(), seqs.size()), mask(mols.size(), seqs.size(), 1.0);
  for (double& v : y.data) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
  molfeat::PretrainConfig pc;
  pc.dim = 4;
  pc.drug_hidden = {8};
  pc.protein_hidden = {8};
  const tensor::Tensor ctd = tensor::Tensor::constant(molfeat::scale_ctd(molfeat::ctd_matrix(seqs)), "ctd");
  auto forward = [&](const molfeat::FeatureModel& model) {
    return [&](tensor::Tape& tape) { return molfeat::stage1_loss(tape, model, mols, ctd, y, mask, pc.gamma); };
  };
  // ReLU outputs can start dead for a whole tiny model; such an init checks
  // nothing, so move on to the next one
  for (std::uint64_t attempt = 0;; ++attempt) {
    pc.seed = Rng::mix(seed + attempt);
    const auto model = molfeat::make_feature_model(pc);
    tensor::Tape tape;
    const tensor::Tensor loss = forward(model)(tape);
    tape.backward(loss);
    double mass = 0.0;
    for (const auto& p : model.params())
      for (double g : p.grad().data) mass += std::abs(g);
    if (mass > 0.0 || attempt == 9) return tensor::grad_check(forward(model), model.params(), 1e-6);
  }
}

}  // namespace hampdti::selfcheck
