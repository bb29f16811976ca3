#include "hampdti/harness/splits.hpp"

#include <algorithm>
#include <set>

#include "hampdti/error.hpp"
#include "hampdti/random.hpp"

namespace hampdti {

std::string to_string(SplitKind k) {
  switch (k) {
    case SplitKind::cv: return "cv";
    case SplitKind::independent: return "independent";
    case SplitKind::unique: return "unique";
    case SplitKind::jaccard: return "jaccard";
  }
  return "?";
}

SplitKind parse_split_kind(const std::string& s) {
  if (s == "cv" || s == "cv10") return SplitKind::cv;
  if (s == "independent") return SplitKind::independent;
  if (s == "unique") return SplitKind::unique;
  if (s == "jaccard") return SplitKind::jaccard;
  throw ConfigError("unknown split kind '" + s + "'");
}

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::vector<std::size_t> x = a, y = b, both;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  y.erase(std::unique(y.begin(), y.end()), y.end());
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(x.size() + y.size() - both.size());
}

Matrix pair_mask(const std::vector<LabeledPair>& pairs, std::size_t m, std::size_t n) {
  Matrix out(m, n);
  for (const auto& p : pairs) out(p.drug, p.protein) = 1.0;
  return out;
}

Matrix pair_labels(const std::vector<LabeledPair>& pairs, std::size_t m, std::size_t n) {
  Matrix out(m, n);
  for (const auto& p : pairs) out(p.drug, p.protein) = p.label;
  return out;
}

std::vector<std::vector<LabeledPair>> stratified_folds(std::vector<LabeledPair> pairs, std::size_t k,
                                                       std::uint64_t seed) {
  if (k == 0) throw ConfigError("fold count must be positive");
  Rng rng = Rng::derive(seed, 0x464f);
  std::vector<LabeledPair> pos, neg;
  for (const auto& p : pairs) (p.label == 1.0 ? pos : neg).push_back(p);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::vector<LabeledPair>> folds(k);
  std::size_t next = 0;
  for (const auto* group : {&pos, &neg})
    for (const auto& p : *group) folds[next++ % k].push_back(p);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

// Negatives drawn uniformly from the unlabeled pairs not in `taken`.
std::vector<LabeledPair> sample_negatives(const Matrix& y, std::size_t count, std::set<std::pair<std::size_t, std::size_t>>& taken,
                                          Rng& rng) {
  std::vector<LabeledPair> pool;
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j)
      if (y(i, j) == 0.0 && !taken.count({i, j})) pool.push_back({i, j, 0.0});
  if (pool.size() < count) throw Error("not enough unlabeled pairs to sample negatives");
  rng.shuffle(pool);
  pool.resize(count);
  for (const auto& p : pool) taken.insert({p.drug, p.protein});
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Carves a stratified validation slice off a training list.
void split_validation(Fold& f, double fraction, Rng& rng) {
  if (fraction <= 0.0) return;
  std::vector<LabeledPair> pos, neg;
  for (const auto& p : f.train) (p.label == 1.0 ? pos : neg).push_back(p);
  rng.shuffle(pos);
  rng.shuffle(neg);
  auto take = [&](std::vector<LabeledPair>& v) {
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(v.size())));
    if (v.size() < 2) return;
    f.val.insert(f.val.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
    v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
  };
  take(pos);
  take(neg);
  f.train = pos;
  f.train.insert(f.train.end(), neg.begin(), neg.end());
  std::sort(f.train.begin(), f.train.end());
  std::sort(f.val.begin(), f.val.end());
}

std::vector<LabeledPair> positives_of(const Matrix& y) {
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j)
      if (y(i, j) == 1.0) out.push_back({i, j, 1.0});
  return out;
}

void check_fold(const Fold& f) {
  bool pos = false;
  for (const auto& p : f.train) pos = pos || p.label == 1.0;
  if (f.train.empty() || !pos) throw Error("split left a fold without training positives");
}

}  // namespace

SplitPlan make_splits(const Dataset& ds, const SplitConfig& cfg) {
  const Matrix y = ds.labels();
  const std::size_t m = y.rows, n = y.cols;
  Rng rng = Rng::derive(cfg.seed, 0x53504c);
  SplitPlan plan;
  plan.config = cfg;
  std::vector<LabeledPair> pos = positives_of(y);
  std::set<std::pair<std::size_t, std::size_t>> taken;

  if (cfg.kind == SplitKind::unique) {
    std::vector<std::size_t> drug_deg(m, 0), prot_deg(n, 0);
    for (const auto& p : pos) {
      ++drug_deg[p.drug];
      ++prot_deg[p.protein];
    }
    std::vector<LabeledPair> uniq, common;
    for (const auto& p : pos) (drug_deg[p.drug] == 1 || prot_deg[p.protein] == 1 ? uniq : common).push_back(p);
    if (uniq.empty()) throw Error("no unique interactions to test on");
    Fold f;
    f.test = uniq;
    auto tneg = sample_negatives(y, uniq.size(), taken, rng);
    f.test.insert(f.test.end(), tneg.begin(), tneg.end());
    f.train = common;
    auto trneg = sample_negatives(y, common.size(), taken, rng);
    f.train.insert(f.train.end(), trneg.begin(), trneg.end());
    std::sort(f.test.begin(), f.test.end());
    split_validation(f, cfg.val_fraction, rng);
    check_fold(f);
    plan.cv_set = f.train;
    plan.cv_set.insert(plan.cv_set.end(), f.val.begin(), f.val.end());
    std::sort(plan.cv_set.begin(), plan.cv_set.end());
    plan.holdout = f.test;
    plan.folds.push_back(std::move(f));
    return plan;
  }

  // independent hold-out: 10% of positives and as many negatives
  rng.shuffle(pos);
  const std::size_t held = static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(pos.size()));
  std::vector<LabeledPair> held_pos(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<LabeledPair> cv_pos(pos.begin() + static_cast<std::ptrdiff_t>(held), pos.end());
  std::sort(held_pos.begin(), held_pos.end());
  std::sort(cv_pos.begin(), cv_pos.end());
  plan.holdout = held_pos;
  if (held) {
    auto hn = sample_negatives(y, held, taken, rng);
    plan.holdout.insert(plan.holdout.end(), hn.begin(), hn.end());
    std::sort(plan.holdout.begin(), plan.holdout.end());
  }
  plan.cv_set = cv_pos;
  auto cn = sample_negatives(y, cv_pos.size(), taken, rng);
  plan.cv_set.insert(plan.cv_set.end(), cn.begin(), cn.end());
  std::sort(plan.cv_set.begin(), plan.cv_set.end());

  if (cfg.kind == SplitKind::independent) {
    if (plan.holdout.empty()) throw Error("hold-out set is empty");
    Fold f;
    f.train = plan.cv_set;
    f.test = plan.holdout;
    split_validation(f, cfg.val_fraction, rng);
    check_fold(f);
    plan.folds.push_back(std::move(f));
    return plan;
  }

  if (cv_pos.size() < cfg.folds) throw Error("fewer positives than folds");
  const auto parts = stratified_folds(plan.cv_set, cfg.folds, cfg.seed);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    Fold f;
    f.test = parts[k];
    for (std::size_t o = 0; o < parts.size(); ++o)
      if (o != k) f.train.insert(f.train.end(), parts[o].begin(), parts[o].end());
    std::sort(f.train.begin(), f.train.end());
    Rng frng = Rng::derive(cfg.seed, 0x56414c + k);
    split_validation(f, cfg.val_fraction, frng);
    plan.folds.push_back(std::move(f));
  }

  if (cfg.kind == SplitKind::jaccard) {
    const std::size_t rel = [&] {
      for (std::size_t i = 0; i < ds.relations.size(); ++i)
        if (ds.relations[i].name == cfg.jaccard_relation) return i;
      throw ConfigError("unknown relation '" + cfg.jaccard_relation + "' for the Jaccard filter");
    }();
    const BaseRelation& r = ds.relations[rel];
    const NodeTypeTable table = ds.table();
    // which side of the interaction the relation describes
    const bool drug_side = r.src_type == ds.types[0] || r.dst_type == ds.types[0];
    const bool prot_side = r.src_type == ds.types[1] || r.dst_type == ds.types[1];
    if (!drug_side && !prot_side) throw ConfigError("Jaccard relation must touch drugs or proteins");
    const std::size_t side = drug_side ? 0 : 1;
    const std::size_t count = drug_side ? m : n, offset = table.offset(side);
    std::vector<std::vector<std::size_t>> nb(count);
    for (const auto& [u, v] : r.edges) {
      if (table.type_of(u) == side) nb[u - offset].push_back(v);
      if (table.type_of(v) == side) nb[v - offset].push_back(u);
    }
    for (auto& f : plan.folds) {
      std::vector<bool> test_node(count, false);
      for (const auto& p : f.test) test_node[drug_side ? p.drug : p.protein] = true;
      std::vector<bool> similar(count, false);
      for (std::size_t a = 0; a < count; ++a)
        for (std::size_t b = 0; b < count && !similar[a]; ++b)
          if (b != a && test_node[b] && jaccard(nb[a], nb[b]) > cfg.jaccard_threshold) similar[a] = true;
      std::erase_if(f.train, [&](const LabeledPair& p) {
        return p.label == 1.0 && similar[drug_side ? p.drug : p.protein];
      });
      check_fold(f);
    }
  }
  for (const auto& f : plan.folds) check_fold(f);
  return plan;
}

}  // namespace hampdti
