#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "ledgerlens/chunk_forge.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/lexicon.hpp"
#include "ledgerlens/table.hpp"
#include "oracles.hpp"

using namespace ledgerlens;
using nlohmann::json;

namespace {

KeywordDictionary small() { return KeywordDictionary::from_json(fixtures::small_lexicon_json()); }

std::string schema_error_of(const json& doc) {
  try {
    KeywordDictionary::from_json(doc);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

std::string random_word(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> ch('a', 'd');
  std::string s(len(rng), 'a');
  for (auto& c : s) c = static_cast<char>(ch(rng));
  return s;
}

}  // namespace

TEST(Lexicon, SynonymLookup) {
  const auto& dict = fixtures::lexicon();
  auto c = dict.lookup("ppp");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->name, "Profit Per Period");
  EXPECT_EQ(c->kind, EntityKind::Metric);
  EXPECT_FALSE(dict.lookup("nonsense"));
}

TEST(Lexicon, Ancestors) {
  const auto dict = small();
  EXPECT_EQ(dict.ancestors("Germany"), (std::vector<std::string>{"Europe"}));
  EXPECT_TRUE(dict.ancestors("Europe").empty());
  EXPECT_EQ(dict.descendants("Europe"), (std::vector<std::string>{"Germany", "France", "UK"}));
}

TEST(Lexicon, AmbiguousSynonymRejected) {
  auto doc = fixtures::small_lexicon_json();
  doc["metrics"][2]["synonyms"].push_back("PPP");
  EXPECT_THROW(KeywordDictionary::from_json(doc), AmbiguousSynonym);
}

TEST(Lexicon, CycleRejected) {
  auto doc = fixtures::small_lexicon_json();
  doc["geo_tree"][0]["parent"] = "Germany";
  EXPECT_THROW(KeywordDictionary::from_json(doc), CycleError);
}

TEST(Lexicon, SchemaErrorsNameThePath) {
  auto doc = fixtures::small_lexicon_json();
  doc["metrics"][1].erase("name");
  EXPECT_EQ(schema_error_of(doc).rfind("$.metrics[1]", 0), 0u) << schema_error_of(doc);

  doc = fixtures::small_lexicon_json();
  doc["geo_tree"][2]["parent"] = "Atlantis";
  EXPECT_NE(schema_error_of(doc).find("$.geo_tree[2]"), std::string::npos) << schema_error_of(doc);

  EXPECT_FALSE(schema_error_of(json::array()).empty());
  doc = fixtures::small_lexicon_json();
  doc.erase("period_tree");
  EXPECT_NE(schema_error_of(doc).find("period_tree"), std::string::npos);
}

TEST(Lexicon, LoadMissingFileFails) {
  EXPECT_THROW(load_lexicon("/nonexistent/lexicon.json"), Error);
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("same", "same"), 0u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("abc", ""), 3u);
}

TEST(Levenshtein, MatchesMatrixOracle) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_word(rng, 12), b = random_word(rng, 12);
    EXPECT_EQ(levenshtein(a, b), oracle::levenshtein(a, b)) << a << " / " << b;
  }
}

TEST(Levenshtein, IsAMetric) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_word(rng, 8), b = random_word(rng, 8), c = random_word(rng, 8);
    EXPECT_EQ(levenshtein(a, b), levenshtein(b, a));
    EXPECT_EQ(levenshtein(a, b) == 0, a == b);
    EXPECT_LE(levenshtein(a, c), levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST(SpellCorrect, FixesTypos) {
  const auto dict = small();
  EXPECT_EQ(spell_correct("growht in Germny", dict), "growth in Germany");
}

TEST(SpellCorrect, LeavesKnownAndNumericTokens) {
  const auto dict = small();
  EXPECT_EQ(spell_correct("growth in Germany", dict), "growth in Germany");
  EXPECT_EQ(spell_correct("3.5%", dict), "3.5%");
  EXPECT_EQ(spell_correct("FY23-Q3", dict), "FY23-Q3");
  EXPECT_EQ(spell_correct("zzzzzzzz", dict), "zzzzzzzz");
}

TEST(SpellCorrect, ShortTokensAcceptOneEdit) {
  const auto dict = small();
  EXPECT_EQ(spell_correct("gpd", dict), "gpd");  // two edits from "gdp"
  EXPECT_EQ(spell_correct("gdx", dict), "GDP");
}

TEST(SpellCorrect, Idempotent) {
  const auto& dict = fixtures::lexicon();
  for (const char* q : {"growht in Germny", "Wat was revnue in Japn for FY23-Q2?", "summarise th trnds",
                        "hw can we improv margn in Frnce"}) {
    const auto once = spell_correct(q, dict);
    EXPECT_EQ(spell_correct(once, dict), once) << q;
  }
}

TEST(ExtractEntities, WorkedExample) {
  const auto e = extract_entities("Where in Europe is the highest GDP growth in FY23?", small());
  EXPECT_EQ(e.metrics, (std::set<std::string>{"GDP growth"}));
  EXPECT_EQ(e.geos, (std::set<std::string>{"Europe"}));
  EXPECT_EQ(e.periods, (std::set<std::string>{"FY23"}));
}

TEST(ExtractEntities, NothingFound) { EXPECT_TRUE(extract_entities("hello there", small()).empty()); }

TEST(ExtractEntities, LongestMatchAndDedup) {
  const auto e = extract_entities("profit per period (PPP) in Germany", small());
  EXPECT_EQ(e.metrics, (std::set<std::string>{"Profit Per Period"}));
  const auto spans = small().find_entities("profit per period (PPP) in Germany");
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[0].begin, 0u);
  EXPECT_EQ(spans[0].end, 17u);
}

TEST(ExtractEntities, CaseInsensitiveMultiWord) {
  const auto e = extract_entities("UNITED KINGDOM inflation", small());
  EXPECT_EQ(e.geos, (std::set<std::string>{"UK"}));
  EXPECT_EQ(e.metrics, (std::set<std::string>{"CPI"}));
}

TEST(ExpandHierarchy, Examples) {
  const auto dict = small();
  NamedEntities e;
  e.geos = {"Europe"};
  e.periods = {"FY23"};
  e.metrics = {"GDP"};
  const auto x = expand_hierarchy(e, dict);
  EXPECT_EQ(x.geos, (std::set<std::string>{"Europe", "Germany", "France", "UK"}));
  EXPECT_EQ(x.periods, (std::set<std::string>{"FY23", "FY23-Q1", "FY23-Q2", "FY23-Q3", "FY23-Q4"}));
  EXPECT_EQ(x.metrics, e.metrics);
  NamedEntities leaf;
  leaf.geos = {"Germany"};
  EXPECT_EQ(expand_hierarchy(leaf, dict), leaf);
}

TEST(ExpandHierarchy, MonotoneAndIdempotent) {
  const auto& dict = fixtures::lexicon();
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    NamedEntities e;
    for (const auto& g : dict.geos()) if (rng() % 4 == 0) e.geos.insert(g.name);
    for (const auto& p : dict.periods()) if (rng() % 5 == 0) e.periods.insert(p.name);
    const auto x = expand_hierarchy(e, dict);
    EXPECT_TRUE(std::includes(x.geos.begin(), x.geos.end(), e.geos.begin(), e.geos.end()));
    EXPECT_TRUE(std::includes(x.periods.begin(), x.periods.end(), e.periods.begin(), e.periods.end()));
    EXPECT_EQ(expand_hierarchy(x, dict), x);
  }
}

TEST(FilterDefinitions, Examples) {
  const auto dict = small();
  NamedEntities e;
  e.metrics = {"Profit Per Period"};
  EXPECT_EQ(filter_definitions(dict, e), (std::vector<std::string>{"PPP is profit earned in one period."}));
  EXPECT_TRUE(filter_definitions(dict, NamedEntities{}).empty());
  e.metrics = {"CPI", "GDP"};
  EXPECT_EQ(filter_definitions(dict, e), (std::vector<std::string>{"GDP is total output.", "CPI tracks consumer prices."}));
}

TEST(ExtractEntities, ReproducesPrimaryChunkEntities) {
  const auto records = ingest_table(fixtures::data_dir() / "table.csv");
  for (const auto& c : generate_primary_chunks(records)) {
    const auto e = extract_entities(c.text, fixtures::lexicon());
    EXPECT_EQ(e.metrics, c.metrics) << c.id;
    EXPECT_EQ(e.geos, c.geos) << c.id;
    EXPECT_EQ(e.periods, c.periods) << c.id;
  }
}
