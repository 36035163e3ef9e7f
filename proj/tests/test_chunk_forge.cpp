#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "ledgerlens/chunk_forge.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/table.hpp"
#include "ledgerlens/text.hpp"
#include "ledgerlens/trend.hpp"
#include "oracles.hpp"

using namespace ledgerlens;

namespace {

std::vector<TableRecord> parse(const std::string& csv) {
  std::istringstream in(csv);
  return parse_table(in);
}

std::vector<TableRecord> random_table(std::mt19937_64& rng, std::size_t metrics, std::size_t geos, std::size_t periods) {
  std::uniform_real_distribution<double> value(-500, 500);
  std::vector<TableRecord> out;
  for (std::size_t m = 0; m < metrics; ++m) {
    for (std::size_t g = 0; g < geos; ++g) {
      for (std::size_t p = 0; p < periods; ++p) {
        const double v = std::round(value(rng) * 100) / 100;
        out.push_back({"Metric" + std::to_string(m), "Geo" + std::to_string(g), "P" + std::to_string(10 + p), v,
                       m % 2 ? "%" : "$M"});
      }
    }
  }
  return out;
}

}  // namespace

TEST(IngestTable, MapsFields) {
  auto rows = parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], (TableRecord{"GDP", "Germany", "FY23", 3.5, "%"}));
}

TEST(IngestTable, EmptyInputGivesNoRecords) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("metric,geo,period,value,unit\n").empty());
}

TEST(IngestTable, DuplicateKeyRejected) {
  EXPECT_THROW(parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\nGDP,Germany,FY23,4,%\n"), DuplicateKey);
}

TEST(IngestTable, MalformedRowCarriesLine) {
  try {
    parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\nCPI,Germany,FY23,abc,%\n");
    FAIL() << "expected MalformedRow";
  } catch (const MalformedRow& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5\n"), MalformedRow);
  EXPECT_THROW(parse("metric,geo,period,value,unit\nGDP,,FY23,3.5,%\n"), MalformedRow);
  EXPECT_THROW(parse("metric,geo,period,value,unit\nGDP,Germany,FY23,inf,%\n"), MalformedRow);
}

TEST(IngestTable, QuotedFieldsAndSchemaMapping) {
  std::istringstream in("Indicator,Country,When,Val,U\n\"GDP, real\",\"Ger\"\"many\",FY23,1250.5,$M\n");
  TableSchema schema{"Indicator", "Country", "When", "Val", "U"};
  auto rows = parse_table(in, schema);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].metric, "GDP, real");
  EXPECT_EQ(rows[0].geo, "Ger\"many");
  EXPECT_DOUBLE_EQ(rows[0].value, 1250.5);
}

TEST(IngestTable, MissingColumnIsMalformed) {
  EXPECT_THROW(parse("metric,geo,value,unit\nGDP,Germany,3.5,%\n"), MalformedRow);
}

TEST(PrimaryChunks, GroupsByGeoAndPeriod) {
  auto rows = parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\nCPI,Germany,FY23,2.1,%\n");
  auto chunks = generate_primary_chunks(rows);
  ASSERT_EQ(chunks.size(), 1u);
  const auto& c = chunks[0];
  EXPECT_NE(c.text.find("3.5"), std::string::npos);
  EXPECT_NE(c.text.find("2.1"), std::string::npos);
  EXPECT_EQ(c.metrics, (std::set<std::string>{"CPI", "GDP"}));
  EXPECT_EQ(c.geos, (std::set<std::string>{"Germany"}));
  EXPECT_EQ(c.periods, (std::set<std::string>{"FY23"}));
  EXPECT_EQ(c.kind, ChunkKind::Primary);
  EXPECT_EQ(split_sentences(c.text).size(), 2u);
}

TEST(PrimaryChunks, TwelveMetricsSplitIntoTwo) {
  std::vector<TableRecord> rows;
  for (int m = 0; m < 12; ++m) rows.push_back({"M" + std::to_string(m), "Germany", "FY23", m + 0.5, "%"});
  auto chunks = generate_primary_chunks(rows);
  ASSERT_EQ(chunks.size(), 2u);
  for (const auto& c : chunks) {
    const auto n = split_sentences(c.text).size();
    EXPECT_GE(n, kMinChunkSentences);
    EXPECT_LE(n, kMaxChunkSentences);
  }
}

TEST(PrimaryChunks, SingleMetricGetsHeaderSentence) {
  auto chunks = generate_primary_chunks(parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\n"));
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(split_sentences(chunks[0].text).size(), 2u);
  EXPECT_NE(chunks[0].text.find("Germany"), std::string::npos);
  EXPECT_EQ(chunks[0].numbers.values(), (std::vector<double>{3.5}));
}

TEST(FeatureChunks, MaxMinAverage) {
  auto rows = parse(
      "metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\nGDP,France,FY23,2.0,%\nGDP,UK,FY23,1.0,%\n");
  auto chunks = generate_feature_chunks(rows);
  ASSERT_EQ(chunks.size(), 1u);
  const auto sentences = split_sentences(chunks[0].text);
  ASSERT_EQ(sentences.size(), 3u);
  EXPECT_NE(sentences[0].find("Germany"), std::string::npos);
  EXPECT_NE(sentences[0].find("highest"), std::string::npos);
  EXPECT_NE(sentences[0].find("3.50"), std::string::npos);
  EXPECT_NE(sentences[1].find("UK"), std::string::npos);
  // (3.5 + 2.0 + 1.0) / 3 = 2.1666...
  EXPECT_NE(sentences[2].find("2.17"), std::string::npos);
}

TEST(FeatureChunks, SingleGeoIsBothExtremes) {
  auto chunks = generate_feature_chunks(parse("metric,geo,period,value,unit\nGDP,Germany,FY23,3.5,%\n"));
  const auto s = split_sentences(chunks.at(0).text);
  EXPECT_NE(s[0].find("Germany"), std::string::npos);
  EXPECT_NE(s[1].find("Germany"), std::string::npos);
}

TEST(FeatureChunks, TieNamesFirstAndNotesOthers) {
  auto chunks = generate_feature_chunks(
      parse("metric,geo,period,value,unit\nGDP,UK,FY23,3.5,%\nGDP,France,FY23,3.5,%\nGDP,Germany,FY23,1,%\n"));
  const auto s = split_sentences(chunks.at(0).text);
  EXPECT_EQ(s[0].find("France"), s[0].find("In FY23, ") + 9);
  EXPECT_NE(s[0].find("tied with UK"), std::string::npos);
}

TEST(FeatureChunks, ExtremesAgreeWithFullScan) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto rows = random_table(rng, 2, 1 + t % 7, 2);
    for (const auto& c : generate_feature_chunks(rows)) {
      const std::string metric = *c.metrics.begin();
      const std::string period = *c.periods.begin();
      double hi = -1e18, lo = 1e18;
      std::string hi_geo, lo_geo;
      for (const auto& r : rows) {
        if (r.metric != metric || r.period != period) continue;
        if (r.value > hi || (r.value == hi && r.geo < hi_geo)) hi = r.value, hi_geo = r.geo;
        if (r.value < lo || (r.value == lo && r.geo < lo_geo)) lo = r.value, lo_geo = r.geo;
      }
      const auto s = split_sentences(c.text);
      EXPECT_NE(s[0].find(", " + hi_geo + " had the highest"), std::string::npos) << s[0];
      EXPECT_NE(s[0].find(format_fixed2(hi)), std::string::npos) << s[0];
      EXPECT_NE(s[1].find(", " + lo_geo + " had the lowest"), std::string::npos) << s[1];
      EXPECT_NE(s[1].find(format_fixed2(lo)), std::string::npos) << s[1];
    }
  }
}

TEST(Trend, ExactLinearData) {
  const std::vector<double> ys{2, 4, 6};
  auto fit = ols_fit(ys);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  std::vector<SeriesPoint> pts{{"P1", 2}, {"P2", 4}, {"P3", 6}};
  auto rep = analyze_trend(pts);
  ASSERT_TRUE(rep);
  EXPECT_NEAR(rep->forecast, 8.0, 1e-12);
  EXPECT_TRUE(rep->anomalies.empty());
}

TEST(Trend, ZScoreFixtureFlagsAtThreshold) {
  const std::vector<double> xs{10, 10, 10, 10, 22};
  auto z = z_scores(xs);
  ASSERT_EQ(z.size(), 5u);
  EXPECT_NEAR(z[4], 2.0, 1e-12);
  std::vector<SeriesPoint> pts;
  for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({"P" + std::to_string(i), xs[i]});
  auto rep = analyze_trend(pts);
  ASSERT_TRUE(rep);
  ASSERT_EQ(rep->anomalies.size(), 1u);
  EXPECT_EQ(rep->anomalies[0].period, "P4");
}

TEST(Trend, PerfectCorrelation) {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 6};
  auto r = pearson(a, b);
  ASSERT_TRUE(r);
  EXPECT_NEAR(*r, 1.0, 1e-12);
  const std::vector<double> flat{5, 5, 5};
  EXPECT_FALSE(pearson(a, flat));
}

TEST(Trend, ShortAndDegenerateSeries) {
  std::vector<SeriesPoint> two{{"P1", 1}, {"P2", 2}};
  EXPECT_FALSE(analyze_trend(two));
  std::vector<SeriesPoint> three{{"P1", 1}, {"P2", 2}, {"P3", 9}};
  auto rep = analyze_trend(three);
  ASSERT_TRUE(rep);
  EXPECT_TRUE(rep->anomalies.empty()) << "anomalies need four points";
  std::vector<SeriesPoint> flat{{"P1", 4}, {"P2", 4}, {"P3", 4}, {"P4", 4}};
  auto d = analyze_trend(flat);
  ASSERT_TRUE(d);
  EXPECT_TRUE(d->degenerate);
  EXPECT_TRUE(d->anomalies.empty());
  EXPECT_NEAR(d->forecast, 4.0, 1e-12);
}

TEST(Trend, MatchesOraclesOnRandomSeries) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> v(-1000, 1000);
  std::uniform_int_distribution<int> len(3, 30);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> xs(static_cast<std::size_t>(len(rng))), ys(xs.size());
    for (auto& x : xs) x = v(rng);
    for (auto& y : ys) y = v(rng);
    const auto fit = ols_fit(xs);
    const auto ref = oracle::ols(xs);
    EXPECT_NEAR(fit.slope, static_cast<double>(ref.slope), 1e-9);
    EXPECT_NEAR(fit.intercept, static_cast<double>(ref.intercept), 1e-9);
    const auto z = z_scores(xs);
    const auto zref = oracle::z_scores(xs);
    ASSERT_EQ(z.size(), zref.size());
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], static_cast<double>(zref[i]), 1e-9);
    const auto r = pearson(xs, ys);
    const auto rref = oracle::pearson(xs, ys);
    ASSERT_EQ(r.has_value(), rref.has_value());
    if (r) {
      EXPECT_NEAR(*r, static_cast<double>(*rref), 1e-9);
      EXPECT_LE(std::fabs(*r), 1.0);
    }
  }
}

TEST(TrendChunks, IncreasingSeriesRendersDirectionAndForecast) {
  auto rows = parse("metric,geo,period,value,unit\nGDP,Germany,P1,2,%\nGDP,Germany,P2,4,%\nGDP,Germany,P3,6,%\n");
  auto chunks = generate_trend_chunks(rows);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_NE(chunks[0].text.find("increasing"), std::string::npos);
  EXPECT_TRUE(chunks[0].numbers.contains(8.0));
}

TEST(TrendChunks, DegenerateSeriesStatesUnchanged) {
  auto rows = parse("metric,geo,period,value,unit\nGDP,Germany,P1,4,%\nGDP,Germany,P2,4,%\nGDP,Germany,P3,4,%\n");
  auto chunks = generate_trend_chunks(rows);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_NE(chunks[0].text.find("unchanged"), std::string::npos);
  EXPECT_EQ(split_sentences(chunks[0].text).size(), 2u);
}

TEST(TrendChunks, ShortSeriesSkipped) {
  auto rows = parse("metric,geo,period,value,unit\nGDP,Germany,P1,4,%\nGDP,Germany,P2,5,%\n");
  EXPECT_TRUE(generate_trend_chunks(rows).empty());
}

TEST(TrendChunks, ManySentencesSplit) {
  // One spiky metric with plenty of correlated siblings pushes past ten sentences.
  std::vector<TableRecord> rows;
  for (int m = 0; m < 10; ++m) {
    for (int p = 0; p < 8; ++p) {
      rows.push_back({"M" + std::to_string(m), "Germany", "P" + std::to_string(p), (p == 5 ? 100.0 : p) + m, ""});
    }
  }
  TrendOptions opts;
  auto chunks = generate_trend_chunks(rows, opts);
  bool split = false;
  for (const auto& c : chunks) {
    const auto n = split_sentences(c.text).size();
    EXPECT_GE(n, kMinChunkSentences) << c.id;
    EXPECT_LE(n, kMaxChunkSentences) << c.id;
    split = split || c.id.back() == '1';
  }
  EXPECT_TRUE(split);
}

TEST(ChunkInvariants, OnShippedTable) {
  const auto records = ingest_table(fixtures::data_dir() / "table.csv");
  const auto set = forge_chunks(records, fixtures::lexicon());
  ASSERT_FALSE(set.chunks.empty());
  EXPECT_EQ(set.chunks.size(), set.primary + set.feature + set.trend);
  std::set<std::string> ids;
  for (const auto& c : set.chunks) {
    EXPECT_TRUE(ids.insert(c.id).second) << c.id;
    EXPECT_TRUE(c.numbers.equivalent(extract_numbers(c.text))) << c.id;
    const auto n = split_sentences(c.text).size();
    EXPECT_GE(n, kMinChunkSentences) << c.id;
    EXPECT_LE(n, kMaxChunkSentences) << c.id;
    // Every entity named in the text is carried in the entity sets.
    const auto named = extract_entities(c.text, fixtures::lexicon());
    for (auto kind : {EntityKind::Metric, EntityKind::Geo, EntityKind::Period}) {
      for (const auto& e : named.of(kind)) {
        const auto& have = kind == EntityKind::Metric ? c.metrics : kind == EntityKind::Geo ? c.geos : c.periods;
        EXPECT_TRUE(have.count(e)) << c.id << " names " << e;
      }
    }
  }
  // Each table value appears in exactly one primary chunk.
  for (const auto& r : records) {
    int hits = 0;
    for (const auto& c : set.chunks) {
      if (c.kind == ChunkKind::Primary && c.text.find(render_value(r.value, r.unit)) != std::string::npos &&
          std::find(c.source.begin(), c.source.end(), r.key()) != c.source.end())
        ++hits;
    }
    EXPECT_EQ(hits, 1) << r.key();
  }
}

TEST(ChunkInvariants, Deterministic) {
  const auto records = ingest_table(fixtures::data_dir() / "table.csv");
  std::ostringstream a, b;
  write_chunks_jsonl(a, forge_chunks(records, fixtures::lexicon()).chunks);
  auto shuffled = records;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  write_chunks_jsonl(b, forge_chunks(shuffled, fixtures::lexicon()).chunks);
  EXPECT_EQ(a.str(), b.str());
}

TEST(ChunkJsonl, RoundTripAndValidation) {
  const auto chunks = forge_chunks(ingest_table(fixtures::data_dir() / "table.csv"), fixtures::lexicon()).chunks;
  std::stringstream io;
  write_chunks_jsonl(io, chunks);
  EXPECT_EQ(read_chunks_jsonl(io), chunks);

  auto j = nlohmann::json(chunks.front());
  j["numbers"] = std::vector<double>{42.0};
  std::istringstream bad(j.dump() + "\n");
  EXPECT_THROW(read_chunks_jsonl(bad), SchemaError);
}

TEST(BalancedSplit, Sizes) {
  EXPECT_TRUE(balanced_split(0).empty());
  EXPECT_EQ(balanced_split(10), (std::vector<std::size_t>{10}));
  EXPECT_EQ(balanced_split(11), (std::vector<std::size_t>{6, 5}));
  EXPECT_EQ(balanced_split(12), (std::vector<std::size_t>{6, 6}));
  EXPECT_EQ(balanced_split(21), (std::vector<std::size_t>{7, 7, 7}));
}
