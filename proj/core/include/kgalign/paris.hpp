#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/features.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

// Sparse map from an id pair to a probability. Absent pairs read as 0.
class SparsePairMap {
 public:
  using Key = std::uint64_t;

  static Key key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<Key>(a) << 32) | static_cast<Key>(b);
  }
  static std::pair<std::uint32_t, std::uint32_t> unkey(Key k) {
    return {static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k & 0xffffffffu)};
  }

  double get(std::uint32_t a, std::uint32_t b) const {
    auto it = values_.find(key(a, b));
    return it == values_.end() ? 0.0 : it->second;
  }
  void set(std::uint32_t a, std::uint32_t b, double p) { values_[key(a, b)] = p; }
  bool contains(std::uint32_t a, std::uint32_t b) const { return values_.count(key(a, b)) != 0; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  void clear() { values_.clear(); }

  // Entries sorted by (a, b).
  std::vector<std::pair<Key, double>> sorted() const;
  const std::unordered_map<Key, double>& raw() const { return values_; }

  bool operator==(const SparsePairMap&) const = default;

 private:
  std::unordered_map<Key, double> values_;
};

struct Functionality {
  double fun;      // distinct heads / triples
  double fun_inv;  // distinct tails / triples
};

struct RelationStats {
  std::vector<std::optional<Functionality>> by_relation;

  double fun(RelationId r) const { return by_relation.at(r).value().fun; }
  double fun_inv(RelationId r) const { return by_relation.at(r).value().fun_inv; }
};

struct AlignmentState {
  SparsePairMap ent_prob;  // (kg1 entity, kg2 entity) -> Pr(e1 = e2)
  SparsePairMap seeds;     // lexical evidence, persistent across iterations
  SparsePairMap sub12;     // (kg1 relation, kg2 relation) -> P(r1 in r2)
  SparsePairMap sub21;     // (kg2 relation, kg1 relation) -> P(r2 in r1)
  std::size_t iteration = 0;
};

struct ParisConfig {
  double seed_probability = 0.9;
  double pruning_floor = 0.01;
  double tolerance = 1e-3;
  std::size_t max_iters = 10;
  // Subsumption assumed for every relation pair before the first
  // subsumption update has any entity matches to count.
  double initial_subsumption = 0.1;
  double threshold = 0.5;
};

struct FusionConfig {
  double alpha = 0.5;
  bool clamp_negative_cosine = true;
};

// Similarity between a kg1 entity and a kg2 entity (cosine of embeddings).
using SimilarityFn = std::function<double(EntityId, EntityId)>;

RelationStats compute_functionalities(const KnowledgeGraph& kg);

// Case-fold (ASCII), trim, collapse internal whitespace, strip surrounding punctuation.
std::string normalize_lexical(std::string_view text);

// Pairs with equal normalized names, or sharing a normalized literal under the
// same normalized attribute name, get `seed_probability` in both `seeds` and
// `ent_prob`.
AlignmentState lexical_seed(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                            const ParisConfig& config = {});

// Sets every (r1, r2) and (r2, r1) subsumption to `value`.
void seed_relation_prior(AlignmentState& state, const KnowledgeGraph& kg1,
                         const KnowledgeGraph& kg2, double value);

// Pairs that are each other's most probable counterpart (ties to the smaller
// id). Only these carry evidence into entity and relation updates; without
// the restriction spurious pairs reinforce each other until nearly every
// candidate saturates.
SparsePairMap maximal_assignment(const SparsePairMap& probs);

// One batch update of every candidate pair from a snapshot of `state`.
// Candidates are neighbours of maximal-assignment pairs plus lexical seeds.
// Relations are traversed in both directions: a triple r(y, x) is the
// inverse edge r^-1(x, y), weighted by fun(r) instead of fun_inv(r), and
// matched only against inverse edges on the other side.
AlignmentState update_entity_probabilities(const AlignmentState& state, const KnowledgeGraph& kg1,
                                           const KnowledgeGraph& kg2, const RelationStats& stats1,
                                           const RelationStats& stats2, const SimilarityFn* sim,
                                           const FusionConfig& fusion, const ParisConfig& config);

// Recomputes sub12 and sub21 from the maximal assignment of
// `state.ent_prob`. A triple only counts
// towards the denominator to the degree that both its endpoints have a
// probable counterpart in the other graph.
AlignmentState update_relation_subsumption(const AlignmentState& state, const KnowledgeGraph& kg1,
                                           const KnowledgeGraph& kg2);

// Largest absolute difference over the union of keys (absent reads as 0).
double max_probability_change(const SparsePairMap& before, const SparsePairMap& after);

// Lexical seeding followed by alternating entity/relation updates until the
// largest entity-probability change drops below tolerance or max_iters.
AlignmentState run_paris(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                         const ParisConfig& config, const SimilarityFn* sim = nullptr,
                         const FusionConfig& fusion = {});

// Greedy one-to-one selection of pairs with probability >= threshold, in
// descending probability with ties broken by the smaller (source, target).
std::vector<ScoredPair> emit_mappings(const AlignmentState& state, double threshold);

}  // namespace kgalign
