#include "hampdti/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hampdti/error.hpp"

namespace hampdti {

namespace {

struct Counts {
  std::size_t pos = 0, neg = 0;
};

Counts check(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  Counts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("non-finite score");
    if (labels[i] == 1.0) ++c.pos;
    else if (labels[i] == 0.0) ++c.neg;
    else throw Error("labels must be 0 or 1");
  }
  if (c.pos == 0 || c.neg == 0) throw Error("metrics need at least one positive and one negative");
  return c;
}

// Indices sorted by descending score; ties keep input order.
std::vector<std::size_t> by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  const Counts c = check(scores, labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum keeps every term an integer.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double twice_avg = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1.0) twice_rank_sum += twice_avg;
    i = j;
  }
  const double p = static_cast<double>(c.pos), n = static_cast<double>(c.neg);
  return (twice_rank_sum - p * (p + 1.0)) / (2.0 * p * n);
}

double pr_auc(std::span<const double> scores, std::span<const double> labels) {
  const Counts c = check(scores, labels);
  const auto idx = by_score_desc(scores);
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1.0) ++tp;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(c.pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::vector<double> rescale_min_max(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double a = *lo, b = *hi;
  for (double& s : out) s = b > a ? (s - a) / (b - a) : 0.5;
  return out;
}

MetricRow compute_metrics(std::span<const double> scores, std::span<const double> labels, double threshold) {
  MetricRow m;
  m.roc_auc = roc_auc(scores, labels);
  m.pr_auc = pr_auc(scores, labels);
  const auto r = rescale_min_max(scores);
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const bool pred = r[i] >= threshold;
    const bool pos = labels[i] == 1.0;
    (pred ? (pos ? tp : fp) : (pos ? fn : tn)) += 1.0;
  }
  m.accuracy = (tp + tn) / (tp + tn + fp + fn);
  m.recall = tp / (tp + fn);
  m.specificity = tn / (tn + fp);
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const double> labels) {
  const Counts c = check(scores, labels);
  const auto idx = by_score_desc(scores);
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1.0 ? tp : fp)++;
      ++j;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(c.neg), static_cast<double>(tp) / static_cast<double>(c.pos)});
    i = j;
  }
  return pts;
}

}  // namespace hampdti
