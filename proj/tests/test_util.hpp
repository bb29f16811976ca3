#pragma once

#include <cmath>
#include <vector>

#include "hampdti/hetgraph/sparse.hpp"
#include "hampdti/matrix.hpp"
#include "hampdti/random.hpp"

namespace testutil {

using hampdti::Matrix;
using hampdti::Rng;
using hampdti::SparseMatrix;

inline Matrix random_dense(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

inline Matrix random_binary(std::size_t r, std::size_t c, double density, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.bernoulli(density) ? 1.0 : 0.0;
  return m;
}

inline Matrix random_nonneg_sparse_dense(std::size_t r, std::size_t c, double density, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.bernoulli(density) ? rng.uniform(0.1, 2.0) : 0.0;
  return m;
}

// Plain triple loop; the oracle for every product kernel.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
  const std::size_t n = a.rows;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  return ev;
}

}  // namespace testutil

#include "hampdti/hetgraph/hetgraph.hpp"

namespace testutil {

// DTINet-shaped schema: drug, protein, disease, side_effect with the six base
// edge types, random edges at the given density.
inline hampdti::HetGraph dtinet_like(std::size_t drugs, std::size_t proteins, std::size_t diseases,
                                     std::size_t side_effects, double density, Rng& rng) {
  using namespace hampdti;
  NodeTypeTable table({"drug", "protein", "disease", "side_effect"}, {drugs, proteins, diseases, side_effects});
  auto edges = [&](const std::string& s, const std::string& d) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    const std::size_t si = table.type_index(s), di = table.type_index(d);
    for (std::size_t u = 0; u < table.count(si); ++u)
      for (std::size_t v = 0; v < table.count(di); ++v) {
        if (si == di && v <= u) continue;
        if (rng.bernoulli(density)) e.emplace_back(table.offset(si) + u, table.offset(di) + v);
      }
    return e;
  };
  std::vector<BaseRelation> base = {
      {"drug-drug", "drug", "drug", edges("drug", "drug")},
      {"protein-protein", "protein", "protein", edges("protein", "protein")},
      {"drug-protein", "drug", "protein", edges("drug", "protein")},
      {"drug-disease", "drug", "disease", edges("drug", "disease")},
      {"protein-disease", "protein", "disease", edges("protein", "disease")},
      {"drug-side_effect", "drug", "side_effect", edges("drug", "side_effect")},
  };
  return build_relation_set(table, base);
}

}  // namespace testutil

namespace testutil {

// Small drug/protein/disease network for model tests.
inline hampdti::HetGraph toy_network(std::size_t drugs, std::size_t proteins, std::size_t extras, Rng& rng,
                                     double density = 0.4) {
  using namespace hampdti;
  NodeTypeTable table({"drug", "protein", "disease"}, {drugs, proteins, extras});
  auto edges = [&](std::size_t si, std::size_t di) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t u = 0; u < table.count(si); ++u)
      for (std::size_t v = 0; v < table.count(di); ++v) {
        if (si == di && v <= u) continue;
        if (rng.bernoulli(density)) e.emplace_back(table.offset(si) + u, table.offset(di) + v);
      }
    return e;
  };
  return build_relation_set(table, {{"drug-drug", "drug", "drug", edges(0, 0)},
                                    {"drug-protein", "drug", "protein", edges(0, 1)},
                                    {"drug-disease", "drug", "disease", edges(0, 2)},
                                    {"protein-disease", "protein", "disease", edges(1, 2)}});
}

// Drug-protein block of the network as a 0/1 label matrix.
inline Matrix dp_labels(const hampdti::HetGraph& g) {
  const auto& t = g.node_table();
  const std::size_t d = t.type_index("drug"), p = t.type_index("protein");
  return g.relation(g.relation_id("drug-protein"))
      .matrix.dense_block(t.offset(d), t.offset(d) + t.count(d), t.offset(p), t.offset(p) + t.count(p));
}

}  // namespace testutil
