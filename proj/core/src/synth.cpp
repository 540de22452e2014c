#include "kgalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "kgalign/error.hpp"

namespace kgalign {

void SynthSpec::validate() const {
  std::string problems;
  auto check = [&](bool ok, const char* what) {
    if (!ok) problems += std::string("\n  - ") + what;
  };
  check(n_entities >= 1, "n_entities must be >= 1");
  check(n_relations >= 1, "n_relations must be >= 1");
  check(n_attributes >= 1, "n_attributes must be >= 1");
  check(avg_degree > 0.0 && std::isfinite(avg_degree), "avg_degree must be positive");
  check(name_overlap_ratio >= 0.0 && name_overlap_ratio <= 1.0, "name_overlap_ratio must lie in [0, 1]");
  check(feature_noise_sigma >= 0.0 && std::isfinite(feature_noise_sigma), "sigma must be >= 0");
  check(feature_dim >= 1, "feature_dim must be >= 1");
  if (!problems.empty()) throw ConfigError("invalid synth spec:" + problems);
}

namespace {

constexpr const char* kUri1 = "http://kg1.example.org/";
constexpr const char* kUri2 = "http://kg2.example.org/";

std::string pseudo_word(std::mt19937_64& rng) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::uniform_int_distribution<std::size_t> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> c(0, consonants.size() - 1);
  std::uniform_int_distribution<std::size_t> v(0, vowels.size() - 1);
  std::string word;
  const auto n = syllables(rng);
  for (std::size_t i = 0; i < n; ++i) {
    word.push_back(consonants[c(rng)]);
    word.push_back(vowels[v(rng)]);
  }
  word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

std::string hex_token(std::mt19937_64& rng) {
  static constexpr std::string_view digits = "0123456789abcdef";
  std::uniform_int_distribution<std::size_t> d(0, 15);
  std::string s;
  for (int i = 0; i < 12; ++i) s.push_back(digits[d(rng)]);
  return s;
}

Vector unit_gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : v;
}

Vector noisy_copy(const Vector& ground, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v = ground;
  if (sigma > 0.0) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += sigma * normal(rng);
  }
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : v;
}

}  // namespace

KgPair generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_entities;
  const auto target_triples =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.avg_degree / 2.0));
  const double capacity = static_cast<double>(spec.n_relations) * static_cast<double>(n) *
                          static_cast<double>(n > 0 ? n - 1 : 0);
  if (target_triples == 0 || static_cast<double>(target_triples) > capacity / 2.0) {
    throw ConfigError("avg_degree " + std::to_string(spec.avg_degree) + " is infeasible for " +
                      std::to_string(n) + " entities and " + std::to_string(spec.n_relations) +
                      " relations");
  }

  std::mt19937_64 rng(spec.seed);

  // Second-graph numbering and the overlap subset.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_overlap =
      static_cast<std::size_t>(std::llround(spec.name_overlap_ratio * static_cast<double>(n)));
  std::vector<bool> overlap(n, false);
  for (std::size_t i = 0; i < n_overlap; ++i) overlap[order[i]] = true;

  std::vector<std::string> uri1(n), uri2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto local = pseudo_word(rng) + "_" + std::to_string(i);
    uri1[i] = std::string(kUri1) + "resource/" + local;
    uri2[i] = std::string(kUri2) + "entity/" +
              (overlap[i] ? local : pseudo_word(rng) + "_" + std::to_string(perm[i]) + "_x");
  }
  auto rel_uri = [](const char* base, const char* ns, std::size_t k) {
    return std::string(base) + ns + "rel_" + std::to_string(k);
  };
  auto attr_uri = [](const char* base, const char* ns, std::size_t k) {
    return std::string(base) + ns + "attr_" + std::to_string(k);
  };

  // Relation triples over first-graph indices.
  std::vector<double> weights(n, 1.0);
  if (spec.powerlaw) {
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    for (std::size_t i = 0; i < n; ++i) weights[i] = 1.0 / static_cast<double>(rank[i] + 1);
  }
  std::discrete_distribution<std::size_t> pick_entity(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> pick_relation(0, spec.n_relations - 1);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> triples;
  const std::size_t max_attempts = target_triples * 1000 + 1000;
  for (std::size_t attempt = 0; triples.size() < target_triples; ++attempt) {
    if (attempt >= max_attempts) {
      throw ConfigError("could not sample " + std::to_string(target_triples) +
                        " distinct triples; lower avg_degree");
    }
    const auto h = pick_entity(rng);
    const auto t = pick_entity(rng);
    if (h == t) continue;
    const auto r = pick_relation(rng);
    if (seen.emplace(h, r, t).second) triples.emplace_back(h, r, t);
  }

  // One or two attribute literals per entity.
  struct Literal {
    std::size_t entity, attribute;
    std::string value1, value2;
  };
  std::vector<Literal> literals;
  std::uniform_int_distribution<std::size_t> pick_attribute(0, spec.n_attributes - 1);
  std::bernoulli_distribution second(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> attrs{i % spec.n_attributes};
    if (spec.n_attributes > 1 && second(rng)) {
      auto a = pick_attribute(rng);
      if (a != attrs[0]) attrs.push_back(a);
    }
    for (auto a : attrs) {
      const auto token = hex_token(rng);
      Literal lit{i, a, "a" + token, overlap[i] ? "a" + token : "b" + hex_token(rng)};
      literals.push_back(std::move(lit));
    }
  }

  KnowledgeGraphBuilder b1, b2;
  for (const auto& [h, r, t] : triples) {
    b1.add_relation(uri1[h], rel_uri(kUri1, "ontology/", r), uri1[t]);
  }
  for (const auto& lit : literals) {
    b1.add_attribute(uri1[lit.entity], attr_uri(kUri1, "ontology/", lit.attribute), lit.value1);
  }
  auto shuffled_triples = triples;
  std::shuffle(shuffled_triples.begin(), shuffled_triples.end(), rng);
  for (const auto& [h, r, t] : shuffled_triples) {
    b2.add_relation(uri2[h], rel_uri(kUri2, "property/", r), uri2[t]);
  }
  auto shuffled_literals = literals;
  std::shuffle(shuffled_literals.begin(), shuffled_literals.end(), rng);
  for (const auto& lit : shuffled_literals) {
    b2.add_attribute(uri2[lit.entity], attr_uri(kUri2, "property/", lit.attribute), lit.value2);
  }

  KgPair pair;
  pair.kg1 = std::move(b1).finish();
  pair.kg2 = std::move(b2).finish();

  // Features, drawn in first-graph index order.
  pair.features1 = FeatureStore::empty(spec.feature_dim, n);
  pair.features2 = FeatureStore::empty(spec.feature_dim, n);
  const double sigma = spec.feature_noise_sigma;
  for (std::size_t i = 0; i < n; ++i) {
    const EntityId e1 = *pair.kg1.entities.find(uri1[i]);
    const EntityId e2 = *pair.kg2.entities.find(uri2[i]);
    pair.gold_links.push_back({e1, e2});

    const Vector name_ground = unit_gaussian(rng, spec.feature_dim);
    const Vector other_ground = unit_gaussian(rng, spec.feature_dim);
    pair.features1.name_vecs[e1] = noisy_copy(name_ground, sigma, rng);
    pair.features2.name_vecs[e2] = noisy_copy(overlap[i] ? name_ground : other_ground, sigma, rng);
    for (std::size_t j = 0; j < spec.images_per_entity; ++j) {
      const Vector image_ground = unit_gaussian(rng, spec.feature_dim);
      pair.features1.image_vecs[e1].push_back(noisy_copy(image_ground, sigma, rng));
      pair.features2.image_vecs[e2].push_back(noisy_copy(image_ground, sigma, rng));
    }
  }
  std::sort(pair.gold_links.begin(), pair.gold_links.end());
  return pair;
}

void write_fixture(const KgPair& pair, const std::filesystem::path& dir) {
  write_kg_dir(pair.kg1, dir / "kg1");
  write_kg_dir(pair.kg2, dir / "kg2");
  write_features(pair.features1, pair.kg1.entities, dir / "features1.tsv");
  write_features(pair.features2, pair.kg2.entities, dir / "features2.tsv");
  std::ofstream links(dir / "ent_links", std::ios::binary | std::ios::trunc);
  if (!links) throw Error("cannot write " + (dir / "ent_links").string());
  write_links(pair.gold_links, pair.kg1, pair.kg2, links);
}

KgPair load_fixture(const std::filesystem::path& dir) {
  KgPair pair;
  pair.kg1 = load_kg_dir(dir / "kg1");
  pair.kg2 = load_kg_dir(dir / "kg2");
  pair.features1 = parse_features(dir / "features1.tsv", pair.kg1.entities);
  pair.features2 = parse_features(dir / "features2.tsv", pair.kg2.entities);
  if (std::filesystem::exists(dir / "ent_links")) {
    pair.gold_links = parse_links(dir / "ent_links", pair.kg1, pair.kg2);
  }
  return pair;
}

KgPair with_images_truncated(KgPair pair, std::size_t keep) {
  for (auto* store : {&pair.features1, &pair.features2}) {
    for (auto& images : store->image_vecs) {
      if (images.size() > keep) images.resize(keep);
    }
  }
  return pair;
}

}  // namespace kgalign
