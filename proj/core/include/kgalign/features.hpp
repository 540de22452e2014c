#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/linalg.hpp"

namespace kgalign {

// Precomputed per-entity name and image vectors of one fixed dimension.
struct FeatureStore {
  std::size_t dim = 0;
  std::vector<std::optional<Vector>> name_vecs;  // nullopt: name-absent
  std::vector<std::vector<Vector>> image_vecs;

  static FeatureStore empty(std::size_t dim, std::size_t num_entities);

  std::size_t num_entities() const { return name_vecs.size(); }
  bool has_name(EntityId e) const { return name_vecs.at(e).has_value(); }
};

// Format:
//   dim<TAB>D
//   entity_uri<TAB>{name|image}<TAB>f1 f2 ... fD
FeatureStore parse_features(const std::filesystem::path& path, const Vocabulary& expected_entities);
FeatureStore parse_features(std::istream& in, const Vocabulary& expected_entities,
                            const std::string& source = "features");

// Writes shortest round-trip decimal representations.
void write_features(const FeatureStore& store, const Vocabulary& entities, std::ostream& out);
void write_features(const FeatureStore& store, const Vocabulary& entities,
                    const std::filesystem::path& path);

// Knowledge graphs plus their features and optional reference links.
struct KgPair {
  KnowledgeGraph kg1;
  KnowledgeGraph kg2;
  FeatureStore features1;
  FeatureStore features2;
  std::vector<EntityLink> gold_links;  // evaluation only

  // Throws on mismatched feature dims, feature stores sized for another graph,
  // or links outside the id ranges.
  void validate() const;
};

}  // namespace kgalign
