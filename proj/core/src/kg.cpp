#include "kgalign/kg.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kgalign/error.hpp"

namespace kgalign {

std::uint32_t Vocabulary::intern(std::string_view key) {
  std::string k(key);
  auto it = ids_.find(k);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(keys_.size());
  ids_.emplace(k, id);
  keys_.push_back(std::move(k));
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view key) const {
  auto it = ids_.find(std::string(key));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::string_view local_name(std::string_view uri) {
  const auto slash = uri.rfind('/');
  if (slash == std::string_view::npos || slash + 1 == uri.size()) return uri;
  return uri.substr(slash + 1);
}

std::string display_name(std::string_view uri) {
  std::string name(local_name(uri));
  for (char& c : name) {
    if (c == '_') c = ' ';
  }
  return name;
}

EntityId KnowledgeGraphBuilder::entity(std::string_view uri) {
  const auto before = kg_.entities.size();
  const EntityId id = kg_.entities.intern(uri);
  if (kg_.entities.size() != before) kg_.names.push_back(display_name(uri));
  return id;
}

void KnowledgeGraphBuilder::add_relation(std::string_view head, std::string_view relation,
                                         std::string_view tail) {
  const EntityId h = entity(head);
  const RelationId r = kg_.relations.intern(relation);
  const EntityId t = entity(tail);
  RelTriple triple{h, r, t};
  if (seen_rel_.insert(triple).second) kg_.rel_triples.push_back(triple);
}

void KnowledgeGraphBuilder::add_attribute(std::string_view entity_uri, std::string_view attribute,
                                          std::string_view value) {
  const EntityId e = entity(entity_uri);
  const AttributeId a = kg_.attributes.intern(attribute);
  AttrTriple triple{e, a, std::string(value)};
  if (seen_attr_.insert(triple).second) kg_.attr_triples.push_back(std::move(triple));
}

KnowledgeGraph KnowledgeGraphBuilder::finish() && {
  if (kg_.num_entities() == 0) throw InvalidGraphError("graph has no entities");
  if (kg_.num_relations() == 0) throw InvalidGraphError("graph has no relation triples");
  if (kg_.num_attributes() == 0) throw InvalidGraphError("graph has no attribute triples");
  return std::move(kg_);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

namespace {

// Calls fn(fields) for each non-empty line; returns the number of records.
template <typename Fn>
std::size_t for_each_record(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(source, line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    fn(fields);
    ++records;
  }
  return records;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

KnowledgeGraph parse_kg(std::istream& rel_triples, std::istream& attr_triples,
                        const std::string& rel_source, const std::string& attr_source) {
  KnowledgeGraphBuilder builder;
  const auto n_rel = for_each_record(rel_triples, rel_source, [&](const auto& f) {
    builder.add_relation(f[0], f[1], f[2]);
  });
  if (n_rel == 0) throw InvalidGraphError(rel_source + ": empty relation triple file");
  const auto n_attr = for_each_record(attr_triples, attr_source, [&](const auto& f) {
    builder.add_attribute(f[0], f[1], f[2]);
  });
  if (n_attr == 0) throw InvalidGraphError(attr_source + ": empty attribute triple file");
  return std::move(builder).finish();
}

KnowledgeGraph parse_kg(const std::filesystem::path& rel_triples_path,
                        const std::filesystem::path& attr_triples_path) {
  auto rel = open_input(rel_triples_path);
  auto attr = open_input(attr_triples_path);
  return parse_kg(rel, attr, rel_triples_path.string(), attr_triples_path.string());
}

KnowledgeGraph load_kg_dir(const std::filesystem::path& dir) {
  return parse_kg(dir / "rel_triples", dir / "attr_triples");
}

void write_kg(const KnowledgeGraph& kg, std::ostream& rel_triples, std::ostream& attr_triples) {
  for (const auto& t : kg.rel_triples) {
    rel_triples << kg.entities.key(t.head) << '\t' << kg.relations.key(t.relation) << '\t'
                << kg.entities.key(t.tail) << '\n';
  }
  for (const auto& t : kg.attr_triples) {
    attr_triples << kg.entities.key(t.entity) << '\t' << kg.attributes.key(t.attribute) << '\t'
                 << t.value << '\n';
  }
}

void write_kg_dir(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto rel = open_output(dir / "rel_triples");
  auto attr = open_output(dir / "attr_triples");
  write_kg(kg, rel, attr);
}

void write_scored_pairs(const std::vector<ScoredPair>& pairs, const KnowledgeGraph& kg1,
                        const KnowledgeGraph& kg2, std::ostream& out, int decimals) {
  char buf[64];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, p.score);
    out << kg1.entities.key(p.source) << '\t' << kg2.entities.key(p.target) << '\t' << buf
        << '\n';
  }
}

void write_scored_pairs(const std::vector<ScoredPair>& pairs, const KnowledgeGraph& kg1,
                        const KnowledgeGraph& kg2, const std::filesystem::path& path,
                        int decimals) {
  auto out = open_output(path);
  write_scored_pairs(pairs, kg1, kg2, out, decimals);
}

std::vector<EntityLink> parse_links(const std::filesystem::path& path, const KnowledgeGraph& kg1,
                                    const KnowledgeGraph& kg2) {
  auto in = open_input(path);
  std::vector<EntityLink> links;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw ParseError(path.string(), line_no,
                       "expected 2 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const auto a = kg1.entities.find(fields[0]);
    const auto b = kg2.entities.find(fields[1]);
    if (!a) throw ParseError(path.string(), line_no, "unknown kg1 entity " + std::string(fields[0]));
    if (!b) throw ParseError(path.string(), line_no, "unknown kg2 entity " + std::string(fields[1]));
    links.push_back({*a, *b});
  }
  return links;
}

void write_links(const std::vector<EntityLink>& links, const KnowledgeGraph& kg1,
                 const KnowledgeGraph& kg2, std::ostream& out) {
  for (const auto& l : links) {
    out << kg1.entities.key(l.source) << '\t' << kg2.entities.key(l.target) << '\n';
  }
}

}  // namespace kgalign
