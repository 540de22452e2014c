#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgalign/kg.hpp"
#include "kgalign/linalg.hpp"

namespace kgalign {

// Cosine between every row of `a` and every row of `b`. Zero rows give 0.
Matrix cosine_matrix(const Matrix& a, const Matrix& b);

// CSLS(x, y) = 2 cos(x, y) - r_T(x) - r_S(y), where r_T(x) is the mean of
// the k largest entries of row x and r_S(y) that of column y.
Matrix csls_adjust(const Matrix& cos, std::size_t k);

// Row-wise argmax; ties go to the smallest column.
std::vector<ScoredPair> align(const Matrix& scores);

struct EvalReport {
  std::map<std::size_t, double> hit_at;
  double mrr = 0.0;
  std::size_t n_eval = 0;

  nlohmann::json to_json() const;
};

// Optimistic rank: 1 + number of columns scoring strictly higher than gold.
EvalReport evaluate(const Matrix& scores, const std::vector<EntityLink>& gold,
                    const std::vector<std::size_t>& ks);

// Same metrics over a sparse candidate list. A gold pair missing from the
// list counts as a miss with reciprocal rank 0.
EvalReport evaluate_mappings(const std::vector<ScoredPair>& mappings,
                             const std::vector<EntityLink>& gold,
                             const std::vector<std::size_t>& ks);

}  // namespace kgalign
