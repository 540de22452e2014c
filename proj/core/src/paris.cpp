#include "kgalign/paris.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "kgalign/error.hpp"

namespace kgalign {

std::vector<std::pair<SparsePairMap::Key, double>> SparsePairMap::sorted() const {
  std::vector<std::pair<Key, double>> out(values_.begin(), values_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

RelationStats compute_functionalities(const KnowledgeGraph& kg) {
  const auto r_count = kg.num_relations();
  std::vector<std::unordered_set<EntityId>> heads(r_count), tails(r_count);
  std::vector<std::size_t> triples(r_count, 0);
  for (const auto& t : kg.rel_triples) {
    heads[t.relation].insert(t.head);
    tails[t.relation].insert(t.tail);
    ++triples[t.relation];
  }
  RelationStats stats;
  stats.by_relation.resize(r_count);
  for (std::size_t r = 0; r < r_count; ++r) {
    if (triples[r] == 0) continue;
    const auto n = static_cast<double>(triples[r]);
    stats.by_relation[r] = Functionality{static_cast<double>(heads[r].size()) / n,
                                         static_cast<double>(tails[r].size()) / n};
  }
  return stats;
}

std::string normalize_lexical(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  auto is_strippable = [](unsigned char c) { return c < 0x80 && (std::ispunct(c) || c == ' '); };
  std::size_t begin = 0, end = out.size();
  while (begin < end && is_strippable(static_cast<unsigned char>(out[begin]))) ++begin;
  while (end > begin && is_strippable(static_cast<unsigned char>(out[end - 1]))) --end;
  return out.substr(begin, end - begin);
}

AlignmentState lexical_seed(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                            const ParisConfig& config) {
  std::unordered_map<std::string, std::vector<EntityId>> by_name;
  std::unordered_map<std::string, std::vector<EntityId>> by_literal;
  auto literal_key = [](const KnowledgeGraph& kg, const AttrTriple& t) -> std::string {
    const auto value = normalize_lexical(t.value);
    if (value.empty()) return {};
    return normalize_lexical(display_name(kg.attributes.key(t.attribute))) + '\t' + value;
  };

  for (EntityId e = 0; e < kg2.num_entities(); ++e) {
    auto name = normalize_lexical(kg2.names[e]);
    if (!name.empty()) by_name[name].push_back(e);
  }
  for (const auto& t : kg2.attr_triples) {
    auto key = literal_key(kg2, t);
    if (!key.empty()) by_literal[key].push_back(t.entity);
  }

  AlignmentState state;
  auto seed = [&](EntityId a, EntityId b) {
    state.seeds.set(a, b, config.seed_probability);
    state.ent_prob.set(a, b, config.seed_probability);
  };
  for (EntityId e = 0; e < kg1.num_entities(); ++e) {
    auto it = by_name.find(normalize_lexical(kg1.names[e]));
    if (it == by_name.end()) continue;
    for (EntityId other : it->second) seed(e, other);
  }
  for (const auto& t : kg1.attr_triples) {
    auto key = literal_key(kg1, t);
    if (key.empty()) continue;
    auto it = by_literal.find(key);
    if (it == by_literal.end()) continue;
    for (EntityId other : it->second) seed(t.entity, other);
  }
  return state;
}

void seed_relation_prior(AlignmentState& state, const KnowledgeGraph& kg1,
                         const KnowledgeGraph& kg2, double value) {
  for (RelationId r1 = 0; r1 < kg1.num_relations(); ++r1) {
    for (RelationId r2 = 0; r2 < kg2.num_relations(); ++r2) {
      state.sub12.set(r1, r2, value);
      state.sub21.set(r2, r1, value);
    }
  }
}

SparsePairMap maximal_assignment(const SparsePairMap& probs) {
  // (probability, counterpart) of the best counterpart; ties go to the smaller id.
  std::unordered_map<std::uint32_t, std::pair<double, std::uint32_t>> best1, best2;
  auto offer = [](auto& best, std::uint32_t x, std::uint32_t other, double p) {
    auto [it, inserted] = best.try_emplace(x, p, other);
    if (inserted) return;
    auto& [bp, bo] = it->second;
    if (p > bp || (p == bp && other < bo)) it->second = {p, other};
  };
  for (const auto& [key, p] : probs.raw()) {
    const auto [a, b] = SparsePairMap::unkey(key);
    offer(best1, a, b, p);
    offer(best2, b, a, p);
  }
  SparsePairMap out;
  for (const auto& [key, p] : probs.raw()) {
    const auto [a, b] = SparsePairMap::unkey(key);
    if (best1.at(a).second == b && best2.at(b).second == a) out.set(a, b, p);
  }
  return out;
}

namespace {

// A triple seen from one endpoint. `inverse` is set when that endpoint is the tail.
struct Incidence {
  RelationId relation;
  bool inverse;
  EntityId other;
  double weight;  // fun_inv(r) for forward edges, fun(r) for inverse edges
};

std::vector<std::vector<Incidence>> build_incidence(const KnowledgeGraph& kg,
                                                    const RelationStats& stats) {
  std::vector<std::vector<Incidence>> inc(kg.num_entities());
  for (const auto& t : kg.rel_triples) {
    inc[t.head].push_back({t.relation, false, t.tail, stats.fun_inv(t.relation)});
    inc[t.tail].push_back({t.relation, true, t.head, stats.fun(t.relation)});
  }
  return inc;
}

std::string pair_label(EntityId a, EntityId b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

}  // namespace

AlignmentState update_entity_probabilities(const AlignmentState& state, const KnowledgeGraph& kg1,
                                           const KnowledgeGraph& kg2, const RelationStats& stats1,
                                           const RelationStats& stats2, const SimilarityFn* sim,
                                           const FusionConfig& fusion, const ParisConfig& config) {
  const auto inc1 = build_incidence(kg1, stats1);
  const auto inc2 = build_incidence(kg2, stats2);

  const SparsePairMap evidence = maximal_assignment(state.ent_prob);
  std::unordered_set<SparsePairMap::Key> candidate_set;
  for (const auto& [key, p] : evidence.raw()) {
    const auto [y1, y2] = SparsePairMap::unkey(key);
    for (const auto& a : inc1[y1]) {
      for (const auto& b : inc2[y2]) {
        if (a.inverse == b.inverse) candidate_set.insert(SparsePairMap::key(a.other, b.other));
      }
    }
  }
  for (const auto& [key, p] : state.seeds.raw()) candidate_set.insert(key);
  std::vector<SparsePairMap::Key> candidates(candidate_set.begin(), candidate_set.end());
  std::sort(candidates.begin(), candidates.end());

  AlignmentState next;
  next.seeds = state.seeds;
  next.sub12 = state.sub12;
  next.sub21 = state.sub21;
  next.iteration = state.iteration + 1;

  for (const auto key : candidates) {
    const auto [x1, x2] = SparsePairMap::unkey(key);
    double keep = 1.0 - state.seeds.get(x1, x2);
    for (const auto& a : inc1[x1]) {
      for (const auto& b : inc2[x2]) {
        if (a.inverse != b.inverse) continue;
        const double p = evidence.get(a.other, b.other);
        if (p == 0.0) continue;
        const double sub21 = state.sub21.get(b.relation, a.relation);
        const double sub12 = state.sub12.get(a.relation, b.relation);
        keep *= (1.0 - sub21 * a.weight * p) * (1.0 - sub12 * b.weight * p);
      }
    }
    double prob = 1.0 - keep;
    if (sim != nullptr) {
      const double cos = (*sim)(x1, x2);
      if (!std::isfinite(cos)) {
        throw NumericError("similarity is not finite for pair " + pair_label(x1, x2));
      }
      const double c = fusion.clamp_negative_cosine ? std::max(0.0, cos) : cos;
      prob = fusion.alpha * prob + (1.0 - fusion.alpha) * c;
    }
    if (prob >= config.pruning_floor) next.ent_prob.set(x1, x2, prob);
  }
  return next;
}

namespace {

using MatchLists = std::vector<std::vector<std::pair<EntityId, double>>>;

// P(r_a in r_b) for every relation pair with overlap, relations of `a`
// against relations of `b`. `matches[x]` lists counterparts of a-entity x in
// b; `prob(x, y)` reads Pr(x = y) for x in a, y in b.
template <typename Prob>
void subsumption_direction(const KnowledgeGraph& a, const KnowledgeGraph& b,
                           const MatchLists& matches, Prob&& prob, SparsePairMap& out) {
  std::vector<std::vector<std::pair<RelationId, EntityId>>> out_edges(b.num_entities());
  for (const auto& t : b.rel_triples) out_edges[t.head].emplace_back(t.relation, t.tail);

  std::vector<double> denominator(a.num_relations(), 0.0);
  std::unordered_map<SparsePairMap::Key, double> numerator;
  std::vector<std::pair<RelationId, double>> local;

  for (const auto& t : a.rel_triples) {
    const auto& mx = matches[t.head];
    const auto& my = matches[t.tail];
    if (mx.empty() || my.empty()) continue;

    double unmatched = 1.0;
    for (const auto& [x2, p] : mx) {
      for (const auto& [y2, q] : my) unmatched *= 1.0 - p * q;
    }
    denominator[t.relation] += 1.0 - unmatched;

    local.clear();
    for (const auto& [x2, p] : mx) {
      for (const auto& [r2, y2] : out_edges[x2]) {
        const double q = prob(t.tail, y2);
        if (q == 0.0) continue;
        auto it = std::find_if(local.begin(), local.end(),
                               [r = r2](const auto& e) { return e.first == r; });
        if (it == local.end()) {
          local.emplace_back(r2, 1.0);
          it = std::prev(local.end());
        }
        it->second *= 1.0 - p * q;
      }
    }
    for (const auto& [r2, keep] : local) {
      numerator[SparsePairMap::key(t.relation, r2)] += 1.0 - keep;
    }
  }

  for (const auto& [key, num] : numerator) {
    const auto [r1, r2] = SparsePairMap::unkey(key);
    if (num > 0.0 && denominator[r1] > 0.0) out.set(r1, r2, std::min(1.0, num / denominator[r1]));
  }
}

}  // namespace

AlignmentState update_relation_subsumption(const AlignmentState& state, const KnowledgeGraph& kg1,
                                           const KnowledgeGraph& kg2) {
  const SparsePairMap evidence = maximal_assignment(state.ent_prob);
  MatchLists m12(kg1.num_entities()), m21(kg2.num_entities());
  for (const auto& [key, p] : evidence.sorted()) {
    const auto [e1, e2] = SparsePairMap::unkey(key);
    m12[e1].emplace_back(e2, p);
    m21[e2].emplace_back(e1, p);
  }
  AlignmentState next;
  next.ent_prob = state.ent_prob;
  next.seeds = state.seeds;
  next.iteration = state.iteration;
  subsumption_direction(kg1, kg2, m12,
                        [&](EntityId x1, EntityId x2) { return evidence.get(x1, x2); },
                        next.sub12);
  subsumption_direction(kg2, kg1, m21,
                        [&](EntityId x2, EntityId x1) { return evidence.get(x1, x2); },
                        next.sub21);
  return next;
}

double max_probability_change(const SparsePairMap& before, const SparsePairMap& after) {
  double change = 0.0;
  for (const auto& [key, p] : before.raw()) {
    const auto it = after.raw().find(key);
    change = std::max(change, std::abs(p - (it == after.raw().end() ? 0.0 : it->second)));
  }
  for (const auto& [key, p] : after.raw()) {
    if (before.raw().count(key) == 0) change = std::max(change, std::abs(p));
  }
  return change;
}

AlignmentState run_paris(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                         const ParisConfig& config, const SimilarityFn* sim,
                         const FusionConfig& fusion) {
  auto state = lexical_seed(kg1, kg2, config);
  if (config.max_iters == 0) return state;

  const auto stats1 = compute_functionalities(kg1);
  const auto stats2 = compute_functionalities(kg2);
  seed_relation_prior(state, kg1, kg2, config.initial_subsumption);

  for (std::size_t it = 0; it < config.max_iters; ++it) {
    auto next = update_entity_probabilities(state, kg1, kg2, stats1, stats2, sim, fusion, config);
    next = update_relation_subsumption(next, kg1, kg2);
    const double change = max_probability_change(state.ent_prob, next.ent_prob);
    state = std::move(next);
    if (change < config.tolerance) break;
  }
  return state;
}

std::vector<ScoredPair> emit_mappings(const AlignmentState& state, double threshold) {
  std::vector<ScoredPair> ranked;
  for (const auto& [key, p] : state.ent_prob.raw()) {
    if (p < threshold) continue;
    const auto [a, b] = SparsePairMap::unkey(key);
    ranked.push_back({a, b, p});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredPair& x, const ScoredPair& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.source != y.source) return x.source < y.source;
    return x.target < y.target;
  });
  std::unordered_set<EntityId> used1, used2;
  std::vector<ScoredPair> out;
  for (const auto& p : ranked) {
    if (used1.count(p.source) || used2.count(p.target)) continue;
    used1.insert(p.source);
    used2.insert(p.target);
    out.push_back(p);
  }
  return out;
}

}  // namespace kgalign
