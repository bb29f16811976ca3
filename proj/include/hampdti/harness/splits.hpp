#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hampdti/harness/dataset.hpp"
#include "hampdti/matrix.hpp"

namespace hampdti {

struct LabeledPair {
  std::size_t drug = 0;
  std::size_t protein = 0;
  double label = 0.0;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
  friend auto operator<=>(const LabeledPair&, const LabeledPair&) = default;
};

struct Fold {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> val;
  std::vector<LabeledPair> test;
};

enum class SplitKind { cv, independent, unique, jaccard };

std::string to_string(SplitKind k);
SplitKind parse_split_kind(const std::string& s);

struct SplitConfig {
  SplitKind kind = SplitKind::cv;
  std::size_t folds = 10;
  double holdout_fraction = 0.1;  // independent test set, taken before CV
  double val_fraction = 0.1;      // of each training part, for early stopping
  // jaccard kind: relation whose neighborhoods are compared, and the cut.
  std::string jaccard_relation = "drug-drug";
  double jaccard_threshold = 0.6;
  std::uint64_t seed = 1;
};

struct SplitPlan {
  SplitConfig config;
  std::vector<LabeledPair> holdout;  // independent test set (positives + equal negatives)
  std::vector<LabeledPair> cv_set;   // everything the folds partition
  std::vector<Fold> folds;
};

// cv: stratified k folds over the CV set (positives outside the holdout plus
// an equal number of sampled negatives); the holdout is never in any fold.
// independent: one fold, train on the CV set, test on the holdout.
// unique: train on interactions whose drug and protein both have more than
// one partner, test on the rest (each with matched negatives).
// jaccard: cv folds, then training positives whose drug (or protein) has a
// neighborhood Jaccard above the threshold with a different test drug (or
// protein) in the named relation are dropped.
SplitPlan make_splits(const Dataset& ds, const SplitConfig& cfg);

// Stratified assignment of pairs to k folds: positives and negatives are dealt
// round-robin after a seeded shuffle, so fold sizes differ by at most one.
std::vector<std::vector<LabeledPair>> stratified_folds(std::vector<LabeledPair> pairs, std::size_t k, std::uint64_t seed);

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

// Masks over the m x n label matrix.
Matrix pair_mask(const std::vector<LabeledPair>& pairs, std::size_t m, std::size_t n);
// Labels of the listed pairs only; everything else 0.
Matrix pair_labels(const std::vector<LabeledPair>& pairs, std::size_t m, std::size_t n);

}  // namespace hampdti
