#include "hampdti/molfeat/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <numeric>
#include <optional>

#include "hampdti/error.hpp"

namespace hampdti::molfeat {

namespace {

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",  "S",  "Cl",
    "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se",
    "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb",
    "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er",
    "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At",
    "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No",
    "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// aromatic symbols allowed inside brackets
constexpr std::array<std::string_view, 9> kAromaticBracket = {"b", "c", "n", "o", "p", "s", "se", "as", "te"};

const std::vector<int>& default_valences(const std::string& element) {
  static const std::map<std::string, std::vector<int>> table = {
      {"B", {3}}, {"C", {4}},       {"N", {3}},  {"O", {2}},  {"P", {3, 5}}, {"S", {2, 4, 6}},
      {"F", {1}}, {"Cl", {1}},      {"Br", {1}}, {"I", {1}}};
  static const std::vector<int> none;
  const auto it = table.find(element);
  return it == table.end() ? none : it->second;
}

int bond_units(BondOrder o) { return o == BondOrder::aromatic ? 1 : static_cast<int>(o); }

struct RingOpen {
  std::size_t atom;
  std::optional<BondOrder> bond;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  MoleculeGraph run() {
    if (s_.empty()) fail("empty SMILES", 0);
    while (pos_ < s_.size()) step();
    if (pending_) fail("dangling bond", pending_offset_);
    if (!branches_.empty()) fail("unclosed branch", branch_offsets_.back());
    if (!rings_.empty()) fail("unmatched ring bond " + std::to_string(rings_.begin()->first), rings_.begin()->second.offset);
    if (mol_.atoms.empty()) fail("no atoms", 0);
    assign_implicit_h();
    mol_.components = count_components();
    return std::move(mol_);
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) { throw ParseError("SMILES: " + what, at); }

  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

  void step() {
    const char c = peek();
    const std::size_t at = pos_;
    switch (c) {
      case '-': set_bond(BondOrder::single, at); return;
      case '/': set_bond(BondOrder::single, at); return;
      case '\\': set_bond(BondOrder::single, at); return;
      case '=': set_bond(BondOrder::double_bond, at); return;
      case '#': set_bond(BondOrder::triple, at); return;
      case ':': set_bond(BondOrder::aromatic, at); return;
      case '(':
        if (!prev_) fail("branch without a preceding atom", at);
        if (pending_) fail("bond before branch open", at);
        branches_.push_back(*prev_);
        branch_offsets_.push_back(at);
        ++pos_;
        return;
      case ')':
        if (branches_.empty()) fail("unmatched ')'", at);
        if (pending_) fail("dangling bond before ')'", at);
        if (prev_ == branches_.back() && at > 0 && s_[at - 1] == '(') fail("empty branch", at);
        prev_ = branches_.back();
        branches_.pop_back();
        branch_offsets_.pop_back();
        ++pos_;
        return;
      case '.':
        if (pending_) fail("bond before '.'", at);
        if (!prev_) fail("'.' without a preceding atom", at);
        if (!branches_.empty()) fail("'.' inside a branch", at);
        prev_.reset();
        ++pos_;
        return;
      case '%': {
        if (!std::isdigit(static_cast<unsigned char>(peek(1))) || !std::isdigit(static_cast<unsigned char>(peek(2)))) {
          fail("'%' must be followed by two digits", at);
        }
        const int id = (peek(1) - '0') * 10 + (peek(2) - '0');
        pos_ += 3;
        ring(id, at);
        return;
      }
      case '[':
        bracket_atom();
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ++pos_;
      ring(c - '0', at);
      return;
    }
    organic_atom();
  }

  void set_bond(BondOrder o, std::size_t at) {
    if (pending_) fail("two consecutive bonds", at);
    if (!prev_) fail("bond without a preceding atom", at);
    pending_ = o;
    pending_offset_ = at;
    ++pos_;
  }

  void ring(int id, std::size_t at) {
    if (!prev_) fail("ring closure without a preceding atom", at);
    auto it = rings_.find(id);
    if (it == rings_.end()) {
      rings_[id] = RingOpen{*prev_, pending_, at};
      pending_.reset();
      return;
    }
    const RingOpen open = it->second;
    rings_.erase(it);
    if (open.atom == *prev_) fail("ring closure to the same atom", at);
    std::optional<BondOrder> order = open.bond;
    if (pending_) {
      if (order && *order != *pending_) fail("conflicting ring-closure bond orders", at);
      order = pending_;
    }
    pending_.reset();
    add_bond(open.atom, *prev_, order, at);
  }

  void add_bond(std::size_t a, std::size_t b, std::optional<BondOrder> order, std::size_t at) {
    for (const Bond& bd : mol_.bonds) {
      if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) fail("duplicate bond", at);
    }
    BondOrder o = BondOrder::single;
    if (order) o = *order;
    else if (mol_.atoms[a].aromatic && mol_.atoms[b].aromatic) o = BondOrder::aromatic;
    mol_.bonds.push_back({a, b, o});
  }

  void push_atom(Atom atom, std::size_t at) {
    const std::size_t idx = mol_.atoms.size();
    mol_.atoms.push_back(std::move(atom));
    if (prev_) add_bond(*prev_, idx, pending_, at);
    else if (pending_) fail("bond without a preceding atom", pending_offset_);
    pending_.reset();
    prev_ = idx;
  }

  void organic_atom() {
    const std::size_t at = pos_;
    const char c = peek();
    Atom atom;
    switch (c) {
      case 'B':
        atom.element = peek(1) == 'r' ? "Br" : "B";
        break;
      case 'C':
        atom.element = peek(1) == 'l' ? "Cl" : "C";
        break;
      case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
        atom.element = std::string(1, c);
        break;
      case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
        atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        atom.aromatic = true;
        break;
      default:
        fail(std::string("unsupported token '") + c + "'", at);
    }
    pos_ += atom.element.size();
    push_atom(std::move(atom), at);
  }

  void bracket_atom() {
    const std::size_t at = pos_;
    ++pos_;  // '['
    Atom atom;
    atom.bracket = true;
    while (std::isdigit(static_cast<unsigned char>(peek()))) atom.isotope = atom.isotope * 10 + (s_[pos_++] - '0');

    // element symbol
    const char c0 = peek();
    if (std::islower(static_cast<unsigned char>(c0))) {
      std::string two{c0, peek(1)};
      std::string one{c0};
      auto is_arom = [](const std::string& x) {
        return std::find(kAromaticBracket.begin(), kAromaticBracket.end(), x) != kAromaticBracket.end();
      };
      if (std::islower(static_cast<unsigned char>(peek(1))) && is_arom(two)) {
        atom.element = two;
      } else if (is_arom(one)) {
        atom.element = one;
      } else {
        fail("unknown aromatic symbol", pos_);
      }
      pos_ += atom.element.size();
      atom.element[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(atom.element[0])));
      atom.aromatic = true;
    } else if (std::isupper(static_cast<unsigned char>(c0))) {
      std::string two{c0, peek(1)};
      if (std::islower(static_cast<unsigned char>(peek(1))) && is_element_symbol(two)) {
        atom.element = two;
      } else if (is_element_symbol(std::string{c0})) {
        atom.element = std::string{c0};
      } else {
        fail("unknown element symbol", pos_);
      }
      pos_ += atom.element.size();
    } else if (c0 == '*') {
      fail("wildcard atoms are not supported", pos_);
    } else {
      fail("expected an element symbol in bracket atom", pos_);
    }

    // chirality (ignored)
    if (peek() == '@') {
      ++pos_;
      if (peek() == '@') ++pos_;
    }
    // hydrogen count
    if (peek() == 'H') {
      ++pos_;
      atom.explicit_h = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) atom.explicit_h = s_[pos_++] - '0';
    }
    // charge
    if (peek() == '+' || peek() == '-') {
      const char sign = s_[pos_++];
      int mag = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        mag = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) mag = mag * 10 + (s_[pos_++] - '0');
      } else {
        while (peek() == sign) {
          ++mag;
          ++pos_;
        }
      }
      atom.charge = sign == '+' ? mag : -mag;
    }
    // atom class (ignored)
    if (peek() == ':') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("atom class needs digits", pos_);
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() != ']') fail(peek() == '\0' ? "unterminated bracket atom" : "unexpected character in bracket atom", pos_);
    ++pos_;
    push_atom(std::move(atom), at);
  }

  void assign_implicit_h() {
    std::vector<int> units(mol_.atoms.size(), 0);
    for (const Bond& b : mol_.bonds) {
      units[b.a] += bond_units(b.order);
      units[b.b] += bond_units(b.order);
    }
    for (std::size_t i = 0; i < mol_.atoms.size(); ++i) {
      Atom& a = mol_.atoms[i];
      if (a.bracket) continue;
      const auto& vals = default_valences(a.element);
      if (vals.empty()) continue;
      const int used = units[i] + (a.aromatic ? 1 : 0);
      a.implicit_h = 0;
      const std::size_t usable = a.aromatic ? 1 : vals.size();
      for (std::size_t k = 0; k < usable; ++k) {
        if (vals[k] >= used) {
          a.implicit_h = vals[k] - used;
          break;
        }
      }
    }
  }

  std::size_t count_components() const {
    std::vector<std::size_t> parent(mol_.atoms.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const Bond& b : mol_.bonds) parent[find(b.a)] = find(b.b);
    std::size_t n = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) n += find(i) == i;
    return n;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  MoleculeGraph mol_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_;
  std::size_t pending_offset_ = 0;
  std::vector<std::size_t> branches_;
  std::vector<std::size_t> branch_offsets_;
  std::map<int, RingOpen> rings_;
};

}  // namespace

bool is_element_symbol(std::string_view symbol) {
  return std::find(kElements.begin(), kElements.end(), symbol) != kElements.end();
}

std::vector<std::vector<std::size_t>> MoleculeGraph::neighbors() const {
  std::vector<std::vector<std::size_t>> adj(atoms.size());
  for (const Bond& b : bonds) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  return adj;
}

std::size_t MoleculeGraph::degree(std::size_t atom) const {
  std::size_t d = 0;
  for (const Bond& b : bonds) d += (b.a == atom) + (b.b == atom);
  return d;
}

MoleculeGraph parse_smiles(std::string_view smiles) { return Parser(smiles).run(); }

}  // namespace hampdti::molfeat
