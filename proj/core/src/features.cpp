#include "kgalign/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "kgalign/error.hpp"

namespace kgalign {

FeatureStore FeatureStore::empty(std::size_t dim, std::size_t num_entities) {
  FeatureStore store;
  store.dim = dim;
  store.name_vecs.resize(num_entities);
  store.image_vecs.resize(num_entities);
  return store;
}

namespace {

Vector parse_vector(std::string_view text, std::size_t dim, const std::string& source,
                    std::size_t line_no) {
  Vector v(static_cast<Eigen::Index>(dim));
  std::size_t count = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (true) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p == end) break;
    double value = 0.0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || (next < end && *next != ' ')) {
      throw ParseError(source, line_no, "malformed float at component " + std::to_string(count + 1));
    }
    if (!std::isfinite(value)) {
      throw ParseError(source, line_no, "non-finite component " + std::to_string(count + 1));
    }
    if (count >= dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(dim) + " components, got more");
    }
    v[static_cast<Eigen::Index>(count++)] = value;
    p = next;
  }
  if (count != dim) {
    throw ParseError(source, line_no,
                     "expected " + std::to_string(dim) + " components, got " + std::to_string(count));
  }
  return v;
}

}  // namespace

FeatureStore parse_features(std::istream& in, const Vocabulary& expected_entities,
                            const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_tabs(line);
    std::size_t parsed = 0;
    if (fields.size() != 2 || fields[0] != "dim") {
      throw ParseError(source, line_no, "expected header 'dim<TAB>D'");
    }
    auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), parsed);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size() || parsed == 0) {
      throw ParseError(source, line_no, "invalid dimension '" + std::string(fields[1]) + "'");
    }
    dim = parsed;
    break;
  }
  if (dim == 0) throw ParseError(source, line_no, "missing 'dim' header");

  auto store = FeatureStore::empty(dim, expected_entities.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(source, line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const auto id = expected_entities.find(fields[0]);
    if (!id) throw ParseError(source, line_no, "unknown entity " + std::string(fields[0]));
    if (fields[1] == "name") {
      if (store.name_vecs[*id]) {
        throw ParseError(source, line_no, "duplicate name vector for " + std::string(fields[0]));
      }
      store.name_vecs[*id] = parse_vector(fields[2], dim, source, line_no);
    } else if (fields[1] == "image") {
      store.image_vecs[*id].push_back(parse_vector(fields[2], dim, source, line_no));
    } else {
      throw ParseError(source, line_no, "unknown kind '" + std::string(fields[1]) + "'");
    }
  }
  return store;
}

FeatureStore parse_features(const std::filesystem::path& path, const Vocabulary& expected_entities) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_features(in, expected_entities, path.string());
}

namespace {

void write_vector(std::ostream& out, const Vector& v) {
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v[i]);
    (void)ec;
    if (i > 0) out << ' ';
    out.write(buf, end - buf);
  }
}

}  // namespace

void write_features(const FeatureStore& store, const Vocabulary& entities, std::ostream& out) {
  out << "dim\t" << store.dim << '\n';
  for (std::size_t e = 0; e < store.num_entities(); ++e) {
    const auto& uri = entities.key(static_cast<std::uint32_t>(e));
    if (store.name_vecs[e]) {
      out << uri << "\tname\t";
      write_vector(out, *store.name_vecs[e]);
      out << '\n';
    }
    for (const auto& img : store.image_vecs[e]) {
      out << uri << "\timage\t";
      write_vector(out, img);
      out << '\n';
    }
  }
}

void write_features(const FeatureStore& store, const Vocabulary& entities,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_features(store, entities, out);
}

void KgPair::validate() const {
  if (features1.dim != features2.dim) {
    throw DimensionError("feature dims differ: " + std::to_string(features1.dim) + " vs " +
                         std::to_string(features2.dim));
  }
  if (features1.num_entities() != kg1.num_entities() ||
      features2.num_entities() != kg2.num_entities()) {
    throw DimensionError("feature store does not match its graph's entity count");
  }
  for (const auto& l : gold_links) {
    if (l.source >= kg1.num_entities() || l.target >= kg2.num_entities()) {
      throw InvalidGraphError("gold link (" + std::to_string(l.source) + ", " +
                              std::to_string(l.target) + ") out of range");
    }
  }
}

}  // namespace kgalign
