#include "kgalign/inference.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <unordered_map>

#include "kgalign/error.hpp"

namespace kgalign {

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("cosine_matrix: embedding widths differ");
  return normalized_rows(a) * normalized_rows(b).transpose();
}

namespace {

template <typename Values>
double mean_top_k(const Values& values, std::size_t k, std::vector<double>& scratch) {
  scratch.assign(values.begin(), values.end());
  const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(k);
  std::partial_sort(scratch.begin(), mid, scratch.end(), std::greater<>());
  // Offsets from the largest value keep the mean of equal values exact.
  const double top = scratch.front();
  double offset = 0.0;
  for (auto it = scratch.begin(); it != mid; ++it) offset += *it - top;
  return top + offset / static_cast<double>(k);
}

}  // namespace

Matrix csls_adjust(const Matrix& cos, std::size_t k) {
  const auto rows = static_cast<std::size_t>(cos.rows());
  const auto cols = static_cast<std::size_t>(cos.cols());
  if (k < 1 || k > std::min(rows, cols)) {
    throw ConfigError("csls: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(std::min(rows, cols)) + "]");
  }
  std::vector<double> scratch;
  Vector r_target(cos.rows());
  for (Eigen::Index i = 0; i < cos.rows(); ++i) r_target[i] = mean_top_k(cos.row(i), k, scratch);
  RowVector r_source(cos.cols());
  for (Eigen::Index j = 0; j < cos.cols(); ++j) r_source[j] = mean_top_k(cos.col(j), k, scratch);

  Matrix out(cos.rows(), cos.cols());
  for (Eigen::Index i = 0; i < cos.rows(); ++i) {
    for (Eigen::Index j = 0; j < cos.cols(); ++j) {
      out(i, j) = 2.0 * cos(i, j) - r_target[i] - r_source[j];
    }
  }
  return out;
}

std::vector<ScoredPair> align(const Matrix& scores) {
  std::vector<ScoredPair> out;
  if (scores.cols() == 0) return out;
  out.reserve(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = j;
    }
    out.push_back({static_cast<EntityId>(i), static_cast<EntityId>(best), scores(i, best)});
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json hit = nlohmann::json::object();
  for (const auto& [k, v] : hit_at) hit[std::to_string(k)] = v;
  return {{"hit", hit}, {"mrr", mrr}, {"n", n_eval}};
}

namespace {

// Ranks are 1-based; 0 marks a miss.
EvalReport summarize(const std::vector<std::size_t>& ranks, const std::vector<std::size_t>& ks) {
  EvalReport report;
  report.n_eval = ranks.size();
  for (auto k : ks) report.hit_at[k] = 0.0;
  if (ranks.empty()) return report;
  double rr = 0.0;
  for (auto rank : ranks) {
    if (rank == 0) continue;
    rr += 1.0 / static_cast<double>(rank);
    for (auto k : ks) {
      if (rank <= k) report.hit_at[k] += 1.0;
    }
  }
  const auto n = static_cast<double>(ranks.size());
  for (auto& [k, v] : report.hit_at) v /= n;
  report.mrr = rr / n;
  return report;
}

}  // namespace

EvalReport evaluate(const Matrix& scores, const std::vector<EntityLink>& gold,
                    const std::vector<std::size_t>& ks) {
  std::string missing;
  for (const auto& l : gold) {
    if (l.source >= scores.rows() || l.target >= scores.cols()) {
      missing += " (" + std::to_string(l.source) + ", " + std::to_string(l.target) + ")";
    }
  }
  if (!missing.empty()) throw Error("gold links outside the score matrix:" + missing);

  std::vector<std::size_t> ranks;
  ranks.reserve(gold.size());
  for (const auto& l : gold) {
    const double target = scores(l.source, l.target);
    std::size_t above = 0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (scores(l.source, j) > target) ++above;
    }
    ranks.push_back(above + 1);
  }
  return summarize(ranks, ks);
}

EvalReport evaluate_mappings(const std::vector<ScoredPair>& mappings,
                             const std::vector<EntityLink>& gold,
                             const std::vector<std::size_t>& ks) {
  std::unordered_map<EntityId, std::vector<std::pair<EntityId, double>>> rows;
  for (const auto& m : mappings) rows[m.source].emplace_back(m.target, m.score);

  std::vector<std::size_t> ranks;
  ranks.reserve(gold.size());
  for (const auto& l : gold) {
    auto it = rows.find(l.source);
    if (it == rows.end()) {
      ranks.push_back(0);
      continue;
    }
    const auto& row = it->second;
    auto hit = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == l.target; });
    if (hit == row.end()) {
      ranks.push_back(0);
      continue;
    }
    std::size_t above = 0;
    for (const auto& e : row) {
      if (e.second > hit->second) ++above;
    }
    ranks.push_back(above + 1);
  }
  return summarize(ranks, ks);
}

}  // namespace kgalign
