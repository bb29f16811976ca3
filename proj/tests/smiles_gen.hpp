#pragma once

#include <algorithm>
#include <iterator>
#include <string>
#include <vector>

#include "hampdti/random.hpp"

namespace testutil {

// Random strings from the supported SMILES grammar. Every output is
// syntactically valid: branches close and ring labels pair up.
class SmilesGenerator {
 public:
  explicit SmilesGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    std::string s;
    const std::size_t parts = 1 + (rng_.bernoulli(0.15) ? 1 : 0);
    for (std::size_t p = 0; p < parts; ++p) {
      if (p) s += '.';
      bonds_.clear();
      open_rings_.clear();
      prev_ = -1;
      chain(s, 0);
      close_all(s);
    }
    return s;
  }

 private:
  void chain(std::string& s, int depth) {
    const std::size_t len = 1 + rng_.below(depth ? 4 : 8);
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) bond(s);
      atom(s);
      if (rng_.bernoulli(0.15) && open_rings_.size() < 3) {
        const int label = fresh_label();
        open_rings_.push_back({label, prev_});
        s += ring_text(label);
      } else if (!open_rings_.empty() && rng_.bernoulli(0.3) && !bonded(open_rings_.back().atom, prev_) &&
                 open_rings_.back().atom != prev_) {
        const Open o = open_rings_.back();
        open_rings_.pop_back();
        bonds_.push_back({o.atom, prev_});
        s += ring_text(o.label);
      }
      if (depth < 3 && rng_.bernoulli(0.2)) {
        const int anchor = prev_;
        s += '(';
        bond(s);
        chain(s, depth + 1);
        s += ')';
        prev_ = anchor;
      }
    }
  }

  void close_all(std::string& s) {
    // Two fresh atoms, so the last one is bonded to none of the openers.
    if (open_rings_.empty()) return;
    s += "CC";
    while (!open_rings_.empty()) {
      s += ring_text(open_rings_.back().label);
      open_rings_.pop_back();
    }
  }

  int fresh_label() {
    int label;
    do label = rng_.bernoulli(0.8) ? 1 + static_cast<int>(rng_.below(9)) : 10 + static_cast<int>(rng_.below(90));
    while (std::any_of(open_rings_.begin(), open_rings_.end(), [&](const Open& o) { return o.label == label; }));
    return label;
  }

  static std::string ring_text(int label) { return label < 10 ? std::to_string(label) : "%" + std::to_string(label); }

  void bond(std::string& s) {
    static const char* kBonds[] = {"", "", "", "", "-", "=", "#", ":", "/", "\\"};
    s += kBonds[rng_.below(std::size(kBonds))];
  }

  bool bonded(int a, int b) const {
    return std::any_of(bonds_.begin(), bonds_.end(), [&](const auto& e) {
      return (e.first == a && e.second == b) || (e.first == b && e.second == a);
    });
  }

  void atom(std::string& s) {
    const int id = next_atom_++;
    if (prev_ >= 0) bonds_.push_back({prev_, id});
    prev_ = id;
    static const char* kOrganic[] = {"C", "C", "C", "N", "O", "S", "P", "B", "F", "Cl", "Br", "I",
                                     "c", "n", "o", "s", "p", "b"};
    static const char* kBracket[] = {"[NH4+]", "[O-]", "[Na+]", "[Fe+2]", "[13CH3]", "[C@@H]", "[nH]",
                                     "[Se]",   "[Pt]", "[2H]",  "[Cu+]",  "[OH-]",   "[C@H:3]", "[U]"};
    if (rng_.bernoulli(0.1)) s += kBracket[rng_.below(std::size(kBracket))];
    else s += kOrganic[rng_.below(std::size(kOrganic))];
  }

  struct Open {
    int label;
    int atom;
  };

  hampdti::Rng rng_;
  std::vector<Open> open_rings_;
  std::vector<std::pair<int, int>> bonds_;
  int prev_ = -1;
  int next_atom_ = 0;
};

}  // namespace testutil
