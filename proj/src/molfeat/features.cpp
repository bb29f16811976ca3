#include "hampdti/molfeat/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "hampdti/error.hpp"

namespace hampdti::molfeat {

std::size_t element_slot(std::string_view element) {
  const auto it = std::find(kElementVocabulary.begin(), kElementVocabulary.end(), element);
  return it == kElementVocabulary.end() ? kElementSlots - 1 : static_cast<std::size_t>(it - kElementVocabulary.begin());
}

namespace {

std::size_t clamp_slot(long v) { return static_cast<std::size_t>(std::clamp<long>(v, 0, kCountSlots - 1)); }

}  // namespace

std::vector<AtomFeatureVector> atom_features(const MoleculeGraph& g) {
  std::vector<std::size_t> degree(g.atoms.size(), 0);
  for (const Bond& b : g.bonds) {
    ++degree[b.a];
    ++degree[b.b];
  }
  std::vector<AtomFeatureVector> out(g.atoms.size());
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    AtomFeatureVector& f = out[i];
    f.fill(0.0);
    const Atom& a = g.atoms[i];
    f[element_slot(a.element)] = 1.0;
    f[kDegreeOffset + clamp_slot(static_cast<long>(degree[i]))] = 1.0;
    f[kTotalHOffset + clamp_slot(a.explicit_h + a.implicit_h)] = 1.0;
    f[kImplicitHOffset + clamp_slot(a.implicit_h)] = 1.0;
    f[kAromaticOffset] = a.aromatic ? 1.0 : 0.0;
  }
  return out;
}

Matrix atom_feature_matrix(const MoleculeGraph& g) {
  const auto feats = atom_features(g);
  Matrix m(feats.size(), kAtomFeatureDim);
  for (std::size_t i = 0; i < feats.size(); ++i) std::copy(feats[i].begin(), feats[i].end(), m.row(i).begin());
  return m;
}

namespace {

// Residue -> group lookup per attribute; -1 marks an invalid code.
struct GroupTable {
  std::array<std::array<int, 26>, kCtdAttributes> group{};

  GroupTable() {
    for (auto& row : group) row.fill(-1);
    for (std::size_t a = 0; a < kCtdAttributes; ++a) {
      for (int g = 0; g < 3; ++g) {
        for (char r : kCtdAttributeTable[a].groups[static_cast<std::size_t>(g)]) group[a][r - 'A'] = g;
      }
      group[a]['B' - 'A'] = group[a]['D' - 'A'];
      group[a]['Z' - 'A'] = group[a]['E' - 'A'];
      group[a]['U' - 'A'] = group[a]['C' - 'A'];
      group[a]['O' - 'A'] = group[a]['K' - 'A'];
      group[a]['J' - 'A'] = group[a]['L' - 'A'];
      group[a]['X' - 'A'] = 1;
    }
  }
};

const GroupTable& groups() {
  static const GroupTable t;
  return t;
}

}  // namespace

int ctd_group(std::size_t attribute, char residue) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(residue)));
  if (up < 'A' || up > 'Z' || attribute >= kCtdAttributes) {
    throw ParseError(std::string("invalid residue '") + residue + "'", 0);
  }
  const int g = groups().group[attribute][up - 'A'];
  if (g < 0) throw ParseError(std::string("invalid residue '") + residue + "'", 0);
  return g;
}

CTDVector ctd_features(std::string_view sequence) {
  if (sequence.empty()) throw ParseError("empty protein sequence", 0);
  const std::size_t len = sequence.size();
  for (std::size_t i = 0; i < len; ++i) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(sequence[i])));
    if (up < 'A' || up > 'Z' || groups().group[0][up - 'A'] < 0) {
      throw ParseError(std::string("invalid residue '") + sequence[i] + "' in protein sequence", i);
    }
  }
  CTDVector out{};
  std::vector<int> label(len);
  for (std::size_t a = 0; a < kCtdAttributes; ++a) {
    double* f = out.data() + a * kCtdPerAttribute;
    std::array<std::size_t, 3> count{};
    std::array<std::vector<std::size_t>, 3> positions;  // 1-based
    for (std::size_t i = 0; i < len; ++i) {
      label[i] = ctd_group(a, sequence[i]);
      ++count[static_cast<std::size_t>(label[i])];
      positions[static_cast<std::size_t>(label[i])].push_back(i + 1);
    }
    const double n = static_cast<double>(len);
    for (std::size_t g = 0; g < 3; ++g) f[g] = static_cast<double>(count[g]) / n;

    std::array<std::size_t, 3> trans{};  // 12, 13, 23
    for (std::size_t i = 1; i < len; ++i) {
      const int x = std::min(label[i - 1], label[i]), y = std::max(label[i - 1], label[i]);
      if (x == y) continue;
      trans[static_cast<std::size_t>(x + y - 1)]++;  // (0,1)->0 (0,2)->1 (1,2)->2
    }
    // shares of the group-crossing pairs, so the three sum to 1 whenever any
    // crossing exists; a single-group sequence keeps all zeros
    const std::size_t crossings = trans[0] + trans[1] + trans[2];
    if (crossings > 0) {
      for (std::size_t t = 0; t < 3; ++t) f[3 + t] = static_cast<double>(trans[t]) / static_cast<double>(crossings);
    }

    for (std::size_t g = 0; g < 3; ++g) {
      const auto& pos = positions[g];
      const std::size_t c = pos.size();
      if (c == 0) continue;
      const std::array<std::size_t, 5> nth = {
          1, static_cast<std::size_t>(std::floor(0.25 * static_cast<double>(c))),
          static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(c))),
          static_cast<std::size_t>(std::floor(0.75 * static_cast<double>(c))), c};
      for (std::size_t q = 0; q < 5; ++q) {
        const std::size_t k = std::max<std::size_t>(nth[q], 1);
        f[6 + g * 5 + q] = static_cast<double>(pos[k - 1]) / n * 100.0;
      }
    }
  }
  return out;
}

Matrix ctd_matrix(const std::vector<std::string>& sequences) {
  Matrix m(sequences.size(), kCtdDim);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const CTDVector v = ctd_features(sequences[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace hampdti::molfeat
