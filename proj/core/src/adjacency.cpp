#include "kgalign/adjacency.hpp"

#include <cmath>
#include <vector>

namespace kgalign {

SparseMatrix build_adjacency(const KnowledgeGraph& kg) {
  const auto m = static_cast<Eigen::Index>(kg.num_entities());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(kg.rel_triples.size() * 2 + kg.num_entities());
  for (const auto& t : kg.rel_triples) {
    if (t.head == t.tail) continue;
    entries.emplace_back(t.head, t.tail, 1.0);
    entries.emplace_back(t.tail, t.head, 1.0);
  }
  for (Eigen::Index i = 0; i < m; ++i) entries.emplace_back(i, i, 1.0);

  // Duplicate edges collapse to 1 rather than summing.
  SparseMatrix a(m, m);
  a.setFromTriplets(entries.begin(), entries.end(), [](double, double) { return 1.0; });

  Vector inv_sqrt_degree(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    inv_sqrt_degree[i] = 1.0 / std::sqrt(a.row(i).sum());
  }
  for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      it.valueRef() = inv_sqrt_degree[it.row()] * inv_sqrt_degree[it.col()];
    }
  }
  return a;
}

}  // namespace kgalign
