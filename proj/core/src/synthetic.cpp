#include "ledgerlens/synthetic.hpp"

#include <cstdio>
#include <random>

#include "ledgerlens/errors.hpp"

namespace ledgerlens {

namespace {

const char* const kMetricNames[] = {"Revenue",     "Operating Cost", "Net Margin",  "Headcount",
                                    "Churn Rate",  "Order Volume",   "Unit Price",  "Inventory",
                                    "Backlog",     "Market Share",   "Cash Flow",   "Freight Cost"};
const char* const kMetricUnits[] = {"$M", "$M", "%", "", "%", "", "", "$M", "$M", "%", "$M", "$M"};

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

std::string period_label(std::size_t year, std::size_t quarter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "FY%02zu-Q%zu", year, quarter);
  return buf;
}

std::string year_label(std::size_t year) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "FY%02zu", year);
  return buf;
}

}  // namespace

const std::vector<std::string>& question_vocabulary() {
  static const std::vector<std::string> words{
      "what", "was", "the", "in", "for", "which", "had", "highest", "lowest", "is", "are", "increasing",
      "decreasing", "summarize", "key", "insights", "on", "how", "can", "be", "improved", "why", "did", "drop",
      "drivers", "of", "trend", "outliers", "does", "impact", "and", "about", "performance", "value", "across",
      "geographies", "a", "an", "to", "at", "by", "from", "with", "tell", "me", "show"};
  return words;
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.metrics == 0 || spec.metrics > std::size(kMetricNames)) throw Error("synthetic: metrics must be 1-12");
  if (spec.geos == 0 || spec.years == 0) throw Error("synthetic: geos and years must be positive");
  const std::size_t regions = std::max<std::size_t>(1, std::min(spec.regions, spec.geos));
  const int gwidth = static_cast<int>(std::to_string(spec.geos).size());

  SyntheticData out;
  nlohmann::json metrics = nlohmann::json::array();
  for (std::size_t m = 0; m < spec.metrics; ++m) {
    metrics.push_back({{"name", kMetricNames[m]},
                       {"definition", std::string(kMetricNames[m]) + " is a generated measure for load tests."}});
  }
  nlohmann::json geos = nlohmann::json::array();
  for (std::size_t r = 0; r < regions; ++r) geos.push_back({{"name", numbered("Zone", r + 1, 2)}});
  std::vector<std::string> geo_names;
  for (std::size_t g = 0; g < spec.geos; ++g) {
    geo_names.push_back(numbered("Market", g + 1, gwidth));
    geos.push_back({{"name", geo_names.back()}, {"parent", numbered("Zone", g % regions + 1, 2)}});
  }
  nlohmann::json periods = nlohmann::json::array();
  std::vector<std::string> period_names;
  for (std::size_t y = 0; y < spec.years; ++y) {
    const std::size_t year = 20 + y;
    periods.push_back({{"name", year_label(year)}, {"sort_key", year_label(year)}});
    for (std::size_t q = 1; q <= 4; ++q) {
      period_names.push_back(period_label(year, q));
      periods.push_back({{"name", period_names.back()}, {"parent", year_label(year)}, {"sort_key", period_names.back()}});
    }
  }
  out.lexicon = {{"metrics", metrics},
                 {"geo_tree", geos},
                 {"period_tree", periods},
                 {"vocabulary", question_vocabulary()}};

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> base(10.0, 500.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  out.records.reserve(spec.metrics * spec.geos * period_names.size());
  for (std::size_t m = 0; m < spec.metrics; ++m) {
    for (const auto& g : geo_names) {
      const double level = base(rng);
      const double slope = noise(rng) * level * 0.02;
      for (std::size_t p = 0; p < period_names.size(); ++p) {
        double v = level + slope * static_cast<double>(p) + noise(rng) * level * 0.05;
        v = std::round(v * 100.0) / 100.0;
        out.records.push_back({kMetricNames[m], g, period_names[p], v, kMetricUnits[m]});
      }
    }
  }
  return out;
}

SyntheticSpec spec_for_chunk_count(std::size_t chunks, SyntheticSpec base) {
  // Per geo: one primary chunk per period (metrics <= 10) and one trend chunk
  // per metric; feature chunks are metrics * periods overall.
  const std::size_t periods = base.years * 4;
  const std::size_t per_geo = periods * ((base.metrics + 9) / 10) + base.metrics;
  const std::size_t fixed = base.metrics * periods;
  base.geos = chunks > fixed ? (chunks - fixed + per_geo - 1) / per_geo : 1;
  base.geos = std::max<std::size_t>(base.geos, 1);
  base.regions = std::max<std::size_t>(1, base.geos / 50);
  return base;
}

std::vector<GeneratedQuestion> generate_questions(const KeywordDictionary& dict, std::size_t n, std::uint64_t seed,
                                                  const std::vector<std::string>& periods) {
  std::vector<std::string> metrics, leaf_geos, parent_geos, leaf_periods = periods;
  for (const auto& m : dict.metrics()) metrics.push_back(m.name);
  for (const auto& g : dict.geos()) (dict.descendants(g.name).empty() ? leaf_geos : parent_geos).push_back(g.name);
  if (leaf_periods.empty()) {
    for (const auto& p : dict.periods())
      if (dict.descendants(p.name).empty()) leaf_periods.push_back(p.name);
  }
  if (metrics.size() < 2 || leaf_geos.empty() || leaf_periods.empty())
    throw Error("question generator needs two metrics, a geography and a period");

  std::mt19937_64 rng(seed);
  auto any = [&rng](const std::vector<std::string>& v) -> const std::string& {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<GeneratedQuestion> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto intent = static_cast<Intent>(i % kIntentCount);
    const auto& m = any(metrics);
    const auto& g = (!parent_geos.empty() && i % 5 == 4) ? any(parent_geos) : any(leaf_geos);
    const auto& p = any(leaf_periods);
    std::string q;
    switch (intent) {
      case Intent::BasicInfo: q = "What was the " + m + " in " + g + " for " + p + "?"; break;
      case Intent::Ranking: q = "Which geographies had the highest " + m + " in " + p + "?"; break;
      case Intent::Direction: q = "Is the " + m + " in " + g + " increasing?"; break;
      case Intent::Summary: q = "Summarize the key insights on " + m + " in " + g + " for " + p + "."; break;
      case Intent::ProblemSolving: q = "How can the " + m + " in " + g + " be improved?"; break;
      case Intent::Diagnostics: q = "Why did the " + m + " in " + g + " drop in " + p + "?"; break;
      case Intent::Performance: q = "How is the " + m + " trend in " + g + "?"; break;
      case Intent::Outliers: q = "What are the outliers for " + m + " in " + g + "?"; break;
      case Intent::Impact: {
        std::string other = m;
        while (other == m) other = any(metrics);
        q = "How does the " + m + " in " + g + " impact the " + other + "?";
        break;
      }
    }
    out.push_back({std::move(q), intent});
  }
  return out;
}

}  // namespace ledgerlens
