#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgalign {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using AttributeId = std::uint32_t;

// Bijection between dense ids (0..n-1, first-appearance order) and URI strings.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view key);
  std::optional<std::uint32_t> find(std::string_view key) const;
  const std::string& key(std::uint32_t id) const { return keys_.at(id); }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct RelTriple {
  EntityId head;
  RelationId relation;
  EntityId tail;
  auto operator<=>(const RelTriple&) const = default;
};

struct AttrTriple {
  EntityId entity;
  AttributeId attribute;
  std::string value;
  auto operator<=>(const AttrTriple&) const = default;
};

struct KnowledgeGraph {
  Vocabulary entities;
  Vocabulary relations;
  Vocabulary attributes;
  std::vector<RelTriple> rel_triples;
  std::vector<AttrTriple> attr_triples;
  std::vector<std::string> names;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_relations() const { return relations.size(); }
  std::size_t num_attributes() const { return attributes.size(); }
};

// Accumulates string-keyed records into a KnowledgeGraph with set semantics.
class KnowledgeGraphBuilder {
 public:
  void add_relation(std::string_view head, std::string_view relation, std::string_view tail);
  void add_attribute(std::string_view entity, std::string_view attribute, std::string_view value);

  // Throws InvalidGraphError unless the graph has at least one entity,
  // relation and attribute.
  KnowledgeGraph finish() &&;

 private:
  KnowledgeGraph kg_;
  std::set<RelTriple> seen_rel_;
  std::set<AttrTriple> seen_attr_;
  EntityId entity(std::string_view uri);
};

// Final path segment of a URI with '_' replaced by ' '.
std::string display_name(std::string_view uri);

// Final path segment of a URI, or the URI itself when it has none.
std::string_view local_name(std::string_view uri);

KnowledgeGraph parse_kg(const std::filesystem::path& rel_triples_path,
                        const std::filesystem::path& attr_triples_path);
KnowledgeGraph parse_kg(std::istream& rel_triples, std::istream& attr_triples,
                        const std::string& rel_source = "rel_triples",
                        const std::string& attr_source = "attr_triples");

// Reads `rel_triples` and `attr_triples` from an OpenEA-style directory.
KnowledgeGraph load_kg_dir(const std::filesystem::path& dir);

void write_kg(const KnowledgeGraph& kg, std::ostream& rel_triples, std::ostream& attr_triples);
void write_kg_dir(const KnowledgeGraph& kg, const std::filesystem::path& dir);

// A reference alignment between an entity of the first graph and one of the second.
struct EntityLink {
  EntityId source;
  EntityId target;
  auto operator<=>(const EntityLink&) const = default;
};

// An entity pair carrying a probability or similarity score.
struct ScoredPair {
  EntityId source;
  EntityId target;
  double score;
  bool operator==(const ScoredPair&) const = default;
};

// `uri1<TAB>uri2<TAB>score` with a fixed number of decimals.
void write_scored_pairs(const std::vector<ScoredPair>& pairs, const KnowledgeGraph& kg1,
                        const KnowledgeGraph& kg2, std::ostream& out, int decimals = 6);
void write_scored_pairs(const std::vector<ScoredPair>& pairs, const KnowledgeGraph& kg1,
                        const KnowledgeGraph& kg2, const std::filesystem::path& path,
                        int decimals = 6);

std::vector<EntityLink> parse_links(const std::filesystem::path& path, const KnowledgeGraph& kg1,
                                    const KnowledgeGraph& kg2);
void write_links(const std::vector<EntityLink>& links, const KnowledgeGraph& kg1,
                 const KnowledgeGraph& kg2, std::ostream& out);

// Splits a line on tabs; strips a trailing '\r'.
std::vector<std::string_view> split_tabs(std::string_view line);

}  // namespace kgalign
