#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hampdti::molfeat {

enum class BondOrder { single = 1, double_bond = 2, triple = 3, aromatic = 4 };

struct Atom {
  std::string element;  // capitalized symbol, e.g. "C", "Cl", "Se"
  bool aromatic = false;
  int charge = 0;
  int explicit_h = 0;  // hydrogens written inside a bracket atom
  int implicit_h = 0;  // derived from default valences (organic subset only)
  int isotope = 0;
  bool bracket = false;
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::single;
};

struct MoleculeGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::size_t components = 0;

  std::size_t num_atoms() const noexcept { return atoms.size(); }
  std::vector<std::vector<std::size_t>> neighbors() const;
  // Number of directly bonded atoms.
  std::size_t degree(std::size_t atom) const;
  int total_h(std::size_t atom) const { return atoms[atom].explicit_h + atoms[atom].implicit_h; }
};

// Parses the supported SMILES subset:
//   organic-subset atoms B C N O P S F Cl Br I and aromatic b c n o p s;
//   bracket atoms [isotope? symbol chirality? Hn? charge? class?];
//   bonds - = # : / \ (stereo marks are read as single bonds);
//   branches, ring closures (digits and %nn), dot-separated components.
// Implicit hydrogens use default valences B3 C4 N3 O2 P3/5 S2/4/6, halogens 1;
// aromatic atoms use their lowest valence with one extra unit for the
// aromatic system. Throws ParseError with the byte offset of the problem.
MoleculeGraph parse_smiles(std::string_view smiles);

bool is_element_symbol(std::string_view symbol);

}  // namespace hampdti::molfeat
