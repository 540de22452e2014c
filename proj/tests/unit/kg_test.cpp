#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "kgalign/error.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {
namespace {

KnowledgeGraph parse_strings(const std::string& rel, const std::string& attr) {
  std::istringstream r(rel), a(attr);
  return parse_kg(r, a);
}

TEST(ParseKg, DuplicateTriplesCollapse) {
  const auto kg = parse_strings("a\tr\tb\na\tr\tb\n", "a\tlabel\tx\n");
  EXPECT_EQ(kg.rel_triples.size(), 1u);
  EXPECT_EQ(kg.num_entities(), 2u);
}

TEST(ParseKg, DisplayNameFromUriTail) {
  EXPECT_EQ(display_name("http://dbpedia.org/resource/New_York"), "New York");
  const auto kg = parse_strings("http://dbpedia.org/resource/New_York\tr\thttp://x.org/B\n",
                                "http://x.org/B\tlabel\tx\n");
  EXPECT_EQ(kg.names[0], "New York");
  EXPECT_EQ(kg.names[1], "B");
}

TEST(ParseKg, ThreeEntityFixtureAssignsIdsInFirstAppearanceOrder) {
  kgalign::testing::TempDir dir;
  kgalign::testing::write_text(dir / "rel_triples",
                               "http://e/Carol\thttp://r/knows\thttp://e/Alice\n"
                               "http://e/Alice\thttp://r/knows\thttp://e/Bob\n");
  kgalign::testing::write_text(dir / "attr_triples",
                               "http://e/Bob\thttp://a/born\t1970\n"
                               "http://e/Carol\thttp://a/born\t1980\n");
  const auto kg = load_kg_dir(dir.path());
  ASSERT_EQ(kg.num_entities(), 3u);
  EXPECT_EQ(kg.num_relations(), 1u);
  EXPECT_EQ(kg.num_attributes(), 1u);
  EXPECT_EQ(kg.entities.key(0), "http://e/Carol");
  EXPECT_EQ(kg.entities.key(1), "http://e/Alice");
  EXPECT_EQ(kg.entities.key(2), "http://e/Bob");
  EXPECT_EQ(kg.rel_triples[0], (RelTriple{0, 0, 1}));
  EXPECT_EQ(kg.rel_triples[1], (RelTriple{1, 0, 2}));
  EXPECT_EQ(kg.attr_triples[0], (AttrTriple{2, 0, "1970"}));
  EXPECT_EQ(kg.attr_triples[1], (AttrTriple{0, 0, "1980"}));
}

TEST(ParseKg, MalformedLineReportsLineNumber) {
  try {
    parse_strings("a\tr\tb\na\tr\n", "a\tl\tx\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  EXPECT_THROW(parse_strings("a\tr\tb\tc\n", "a\tl\tx\n"), ParseError);
}

TEST(ParseKg, EmptyFileIsInvalidGraph) {
  EXPECT_THROW(parse_strings("", "a\tl\tx\n"), InvalidGraphError);
  EXPECT_THROW(parse_strings("a\tr\tb\n", ""), InvalidGraphError);
}

TEST(ParseKg, KeepsAttributeValuesWithSharedKey) {
  const auto kg = parse_strings("a\tr\tb\n", "a\tl\tx\na\tl\ty\n");
  EXPECT_EQ(kg.attr_triples.size(), 2u);
}

TEST(ParseKg, IngestionIsIdempotent) {
  const auto kg = parse_strings("a\tr\tb\nb\ts\tc\nc\tr\ta\na\tr\tb\n", "c\tl\tx y\nb\tm\tz\n");
  std::ostringstream rel, attr;
  write_kg(kg, rel, attr);
  const auto again = parse_strings(rel.str(), attr.str());
  EXPECT_EQ(again.entities.keys(), kg.entities.keys());
  EXPECT_EQ(again.relations.keys(), kg.relations.keys());
  EXPECT_EQ(again.attributes.keys(), kg.attributes.keys());
  EXPECT_EQ(again.rel_triples, kg.rel_triples);
  EXPECT_EQ(again.attr_triples, kg.attr_triples);
  EXPECT_EQ(again.names, kg.names);
}

TEST(ParseKg, IdUriMappingIsBijective) {
  const auto kg = parse_strings("a\tr\tb\nb\tr\tc\nd\tr\ta\n", "e\tl\tx\n");
  for (EntityId e = 0; e < kg.num_entities(); ++e) {
    EXPECT_EQ(kg.entities.find(kg.entities.key(e)), e);
  }
  std::set<std::string> distinct(kg.entities.keys().begin(), kg.entities.keys().end());
  EXPECT_EQ(distinct.size(), kg.num_entities());
}

TEST(ParseKg, TriplesReferenceValidIds) {
  const auto kg = parse_strings("a\tr\tb\nb\ts\tc\n", "c\tl\tx\n");
  for (const auto& t : kg.rel_triples) {
    EXPECT_LT(t.head, kg.num_entities());
    EXPECT_LT(t.tail, kg.num_entities());
    EXPECT_LT(t.relation, kg.num_relations());
  }
}

TEST(KnowledgeGraphBuilder, RequiresRelationsAndAttributes) {
  KnowledgeGraphBuilder b;
  b.add_relation("a", "r", "b");
  EXPECT_THROW(std::move(b).finish(), InvalidGraphError);
}

TEST(Links, RoundTripThroughFile) {
  const auto kg1 = parse_strings("a1\tr\tb1\n", "a1\tl\tx\n");
  const auto kg2 = parse_strings("a2\tr\tb2\n", "a2\tl\tx\n");
  kgalign::testing::TempDir dir;
  std::vector<EntityLink> links{{0, 0}, {1, 1}};
  {
    std::ofstream out(dir / "ent_links");
    write_links(links, kg1, kg2, out);
  }
  EXPECT_EQ(parse_links(dir / "ent_links", kg1, kg2), links);
  kgalign::testing::write_text(dir / "bad", "a1\tzz\n");
  EXPECT_THROW(parse_links(dir / "bad", kg1, kg2), ParseError);
}

TEST(ScoredPairs, SixDecimalTsv) {
  const auto kg1 = parse_strings("a1\tr\tb1\n", "a1\tl\tx\n");
  const auto kg2 = parse_strings("a2\tr\tb2\n", "a2\tl\tx\n");
  std::ostringstream out;
  write_scored_pairs({{0, 1, 0.5}, {1, 0, 1.0 / 3.0}}, kg1, kg2, out);
  EXPECT_EQ(out.str(), "a1\tb2\t0.500000\nb1\ta2\t0.333333\n");
}

}  // namespace
}  // namespace kgalign
