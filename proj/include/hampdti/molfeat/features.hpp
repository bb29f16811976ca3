#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hampdti/matrix.hpp"
#include "hampdti/molfeat/smiles.hpp"

namespace hampdti::molfeat {

// Atom feature layout (78 columns):
//   [0, 44)   element one-hot over kElementVocabulary, last slot = other
//   [44, 55)  degree 0..10 (values above 10 clamp to the last slot)
//   [55, 66)  total hydrogens 0..10
//   [66, 77)  implicit hydrogens 0..10
//   [77]      aromatic flag
inline constexpr std::size_t kElementSlots = 44;
inline constexpr std::size_t kCountSlots = 11;
inline constexpr std::size_t kDegreeOffset = kElementSlots;
inline constexpr std::size_t kTotalHOffset = kDegreeOffset + kCountSlots;
inline constexpr std::size_t kImplicitHOffset = kTotalHOffset + kCountSlots;
inline constexpr std::size_t kAromaticOffset = kImplicitHOffset + kCountSlots;
inline constexpr std::size_t kAtomFeatureDim = kAromaticOffset + 1;
static_assert(kAtomFeatureDim == 78);

// 43 named elements; anything else lands in slot 43.
inline constexpr std::array<std::string_view, 43> kElementVocabulary = {
    "C",  "N",  "O",  "S",  "F",  "Si", "P",  "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al",
    "I",  "B",  "V",  "K",  "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H",
    "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb"};

std::size_t element_slot(std::string_view element);

using AtomFeatureVector = std::array<double, kAtomFeatureDim>;

std::vector<AtomFeatureVector> atom_features(const MoleculeGraph& g);
// q x 78 matrix, one row per atom.
Matrix atom_feature_matrix(const MoleculeGraph& g);

// ---------------------------------------------------------------------------
// CTD protein descriptors.
//
// Seven physicochemical attributes, each a three-group partition of the 20
// standard residues. Per attribute, 21 values in this order:
//   composition    c1 c2 c3        group fractions
//   transition     t12 t13 t23     share of the group-switching adjacent pairs per group pair
//   distribution   d1[5] d2[5] d3[5]
//                  position (percent of length) of the first, 25%, 50%, 75%
//                  and last occurrence of each group; 0 when the group is absent
inline constexpr std::size_t kCtdAttributes = 7;
inline constexpr std::size_t kCtdPerAttribute = 21;
inline constexpr std::size_t kCtdDim = kCtdAttributes * kCtdPerAttribute;
static_assert(kCtdDim == 147);

struct CtdAttribute {
  std::string_view name;
  std::array<std::string_view, 3> groups;
};

inline constexpr std::array<CtdAttribute, kCtdAttributes> kCtdAttributeTable = {{
    {"hydrophobicity", {"RKEDQN", "GASTPHY", "CLVIMFW"}},
    {"normalized_vdw_volume", {"GASTPDC", "NVEQIL", "MHKFRYW"}},
    {"polarity", {"LIFWCMVY", "PGAST", "HQRKNED"}},
    {"polarizability", {"GASDT", "CPNVEQIL", "KMHFRYW"}},
    {"charge", {"KR", "ANCQGHILMFPSTWYV", "DE"}},
    {"secondary_structure", {"EALMQKRH", "VIYCWFT", "GNPSD"}},
    {"solvent_accessibility", {"ALFCGIVW", "RKQEND", "MPSHTY"}},
}};

// Non-standard residue codes are read as a stand-in residue before grouping:
// B -> D, Z -> E, U -> C, O -> K, J -> L. X goes to group 2 of every attribute.
inline constexpr std::string_view kAmbiguousResidues = "BZUOJX";

using CTDVector = std::array<double, kCtdDim>;

// Group index 0..2 of a residue for an attribute. Lowercase accepted.
// Throws ParseError on a character that is not a residue code.
int ctd_group(std::size_t attribute, char residue);

CTDVector ctd_features(std::string_view sequence);
Matrix ctd_matrix(const std::vector<std::string>& sequences);

}  // namespace hampdti::molfeat
