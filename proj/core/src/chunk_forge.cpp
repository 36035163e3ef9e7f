#include "ledgerlens/chunk_forge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "ledgerlens/text.hpp"

namespace ledgerlens {

namespace {

struct Sentence {
  std::string text;
  std::set<std::string> metrics;
  std::set<std::string> geos;
  std::set<std::string> periods;
  std::vector<std::string> source;
};

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
  const std::string needle = "{" + key + "}";
  for (auto pos = tmpl.find(needle); pos != std::string::npos; pos = tmpl.find(needle, pos + value.size())) {
    tmpl.replace(pos, needle.size(), value);
  }
  return tmpl;
}

std::string fill(const std::string& tmpl, const TableRecord& r) {
  auto s = substitute(tmpl, "metric", r.metric);
  s = substitute(s, "geo", r.geo);
  s = substitute(s, "period", r.period);
  return substitute(s, "value", render_value(r.value, r.unit));
}

// Packs sentences into evenly sized chunks of at most ten sentences each.
void emit_chunks(std::vector<DataChunk>& out, const std::string& id_prefix, ChunkKind kind,
                 const std::vector<Sentence>& sentences) {
  std::size_t at = 0;
  std::size_t part = 0;
  for (std::size_t size : balanced_split(sentences.size())) {
    std::vector<std::string> texts;
    std::set<std::string> metrics, geos, periods;
    std::vector<std::string> source;
    for (std::size_t i = at; i < at + size; ++i) {
      const auto& s = sentences[i];
      texts.push_back(s.text);
      metrics.insert(s.metrics.begin(), s.metrics.end());
      geos.insert(s.geos.begin(), s.geos.end());
      periods.insert(s.periods.begin(), s.periods.end());
      for (const auto& k : s.source) {
        if (std::find(source.begin(), source.end(), k) == source.end()) source.push_back(k);
      }
    }
    out.push_back(make_chunk(id_prefix + ":" + std::to_string(part), kind, join(texts, " "),
                             std::move(metrics), std::move(geos), std::move(periods),
                             std::move(source)));
    at += size;
    ++part;
  }
}

}  // namespace

std::vector<std::size_t> balanced_split(std::size_t n, std::size_t max_size) {
  if (n == 0) return {};
  const std::size_t parts = (n + max_size - 1) / max_size;
  std::vector<std::size_t> sizes(parts, n / parts);
  for (std::size_t i = 0; i < n % parts; ++i) ++sizes[i];
  return sizes;
}

std::vector<DataChunk> generate_primary_chunks(std::span<const TableRecord> records,
                                               const ChunkTemplates& templates) {
  std::map<std::pair<std::string, std::string>, std::vector<const TableRecord*>> groups;
  for (const auto& r : records) groups[{r.geo, r.period}].push_back(&r);

  std::vector<DataChunk> out;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(),
              [](const TableRecord* a, const TableRecord* b) { return a->metric < b->metric; });
    std::vector<Sentence> sentences;
    if (group.size() == 1) {
      sentences.push_back({fill(templates.header_sentence, *group.front()), {}, {key.first},
                           {key.second}, {}});
    }
    for (const auto* r : group) {
      sentences.push_back({fill(templates.primary_sentence, *r), {r->metric}, {r->geo}, {r->period},
                           {r->key()}});
    }
    emit_chunks(out, "primary:" + key.first + ":" + key.second, ChunkKind::Primary, sentences);
  }
  return out;
}

std::vector<DataChunk> generate_feature_chunks(std::span<const TableRecord> records) {
  std::map<std::pair<std::string, std::string>, std::vector<const TableRecord*>> groups;
  for (const auto& r : records) groups[{r.metric, r.period}].push_back(&r);

  std::vector<DataChunk> out;
  for (auto& [key, group] : groups) {
    const auto& [metric, period] = key;
    std::sort(group.begin(), group.end(),
              [](const TableRecord* a, const TableRecord* b) { return a->geo < b->geo; });
    const std::string& unit = group.front()->unit;

    auto extreme = [&](bool highest) {
      const TableRecord* best = group.front();
      for (const auto* r : group) {
        if (highest ? r->value > best->value : r->value < best->value) best = r;
      }
      std::vector<std::string> tied;
      for (const auto* r : group) {
        if (r != best && r->value == best->value) tied.push_back(r->geo);
      }
      Sentence s;
      s.text = "In " + period + ", " + best->geo + " had the " + (highest ? "highest " : "lowest ") +
               metric + " at " + render_value(best->value, unit);
      if (!tied.empty()) s.text += ", tied with " + join_natural(tied);
      s.text += ".";
      s.metrics = {metric};
      s.geos = {best->geo};
      s.geos.insert(tied.begin(), tied.end());
      s.periods = {period};
      s.source.push_back(best->key());
      return s;
    };

    double sum = 0.0;
    std::vector<std::string> all_keys;
    for (const auto* r : group) {
      sum += r->value;
      all_keys.push_back(r->key());
    }
    const double avg = sum / static_cast<double>(group.size());

    std::vector<Sentence> sentences{extreme(true), extreme(false)};
    sentences.push_back({"The average " + metric + " across geographies in " + period + " was " +
                             render_value(avg, unit) + ".",
                         {metric}, {}, {period}, all_keys});
    emit_chunks(out, "feature:" + metric + ":" + period, ChunkKind::Feature, sentences);
  }
  return out;
}

std::vector<DataChunk> generate_trend_chunks(std::span<const TableRecord> records,
                                             const TrendOptions& options, const PeriodKey& period_key) {
  auto key_of = [&](const std::string& p) { return period_key ? period_key(p) : p; };

  // geo -> metric -> ordered series
  std::map<std::string, std::map<std::string, std::vector<const TableRecord*>>> by_geo;
  for (const auto& r : records) by_geo[r.geo][r.metric].push_back(&r);
  for (auto& [geo, metrics] : by_geo) {
    for (auto& [metric, series] : metrics) {
      std::sort(series.begin(), series.end(), [&](const TableRecord* a, const TableRecord* b) {
        const auto ka = key_of(a->period);
        const auto kb = key_of(b->period);
        return ka != kb ? ka < kb : a->period < b->period;
      });
    }
  }

  struct Pending {
    std::string metric, geo;
    TrendReport report;
    const std::vector<const TableRecord*>* series;
  };
  std::vector<Pending> pending;

  for (const auto& [geo, metrics] : by_geo) {
    std::map<std::string, TrendReport> reports;
    for (const auto& [metric, series] : metrics) {
      std::vector<SeriesPoint> points;
      for (const auto* r : series) points.push_back({r->period, r->value});
      auto report = analyze_trend(points, options);
      if (!report) {
        spdlog::debug("skipping trend for {} in {}: {} periods", metric, geo, series.size());
        continue;
      }
      report->metric = metric;
      report->geo = geo;
      reports.emplace(metric, std::move(*report));
    }
    // Cross-metric correlations within the geo, over identical period coverage.
    for (auto& [metric, report] : reports) {
      if (report.degenerate) continue;
      const auto& series = metrics.at(metric);
      for (const auto& [other, other_report] : reports) {
        if (other == metric || other_report.degenerate) continue;
        const auto& other_series = metrics.at(other);
        if (other_series.size() != series.size()) continue;
        bool same_periods = true;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < series.size(); ++i) {
          same_periods = same_periods && series[i]->period == other_series[i]->period;
          xs.push_back(series[i]->value);
          ys.push_back(other_series[i]->value);
        }
        if (!same_periods) continue;
        auto r = pearson(xs, ys);
        if (r && std::fabs(*r) >= options.correlation_threshold) {
          report.correlations.push_back({other, *r});
        }
      }
    }
    for (auto& [metric, report] : reports) {
      pending.push_back({metric, geo, std::move(report), &metrics.at(metric)});
    }
  }

  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return std::tie(a.metric, a.geo) < std::tie(b.metric, b.geo);
  });

  std::vector<DataChunk> out;
  for (const auto& p : pending) {
    const auto& series = *p.series;
    const std::string& unit = series.front()->unit;
    const std::string& first = series.front()->period;
    const std::string& last = series.back()->period;
    std::vector<std::string> all_keys;
    for (const auto* r : series) all_keys.push_back(r->key());

    std::vector<Sentence> sentences;
    const auto& rep = p.report;
    if (rep.degenerate) {
      sentences.push_back({p.metric + " in " + p.geo + " was unchanged at " +
                               render_value(series.front()->value, unit) + " from " + first + " to " +
                               last + ".",
                           {p.metric}, {p.geo}, {first, last}, all_keys});
      sentences.push_back({"The projected " + p.metric + " in " + p.geo +
                               " for the next period stays at " + render_value(rep.forecast, unit) + ".",
                           {p.metric}, {p.geo}, {}, {}});
    } else {
      const std::string magnitude = format_fixed2(std::fabs(rep.slope));
      std::string direction;
      if (magnitude == "0.00") {
        direction = p.metric + " in " + p.geo + " was broadly flat from " + first + " to " + last + ".";
      } else {
        direction = p.metric + " in " + p.geo + " is " + (rep.slope > 0 ? "increasing" : "decreasing") +
                    " by " + render_value(std::fabs(rep.slope), unit) + " per period from " + first +
                    " to " + last + ".";
      }
      sentences.push_back({direction, {p.metric}, {p.geo}, {first, last}, all_keys});
      sentences.push_back({"The projected " + p.metric + " in " + p.geo + " for the next period is " +
                               render_value(rep.forecast, unit) + ".",
                           {p.metric}, {p.geo}, {}, {}});
      for (const auto& a : rep.anomalies) {
        sentences.push_back({"In " + a.period + ", " + p.metric + " in " + p.geo +
                                 " was an anomaly at " + render_value(a.value, unit) +
                                 " with a z-score of " + format_fixed2(a.z_score) + ".",
                             {p.metric}, {p.geo}, {a.period}, {p.metric + "|" + p.geo + "|" + a.period}});
      }
      for (const auto& c : rep.correlations) {
        sentences.push_back({"In " + p.geo + ", " + p.metric + " and " + c.other_metric +
                                 " have a correlation of " + format_fixed2(c.r) + ".",
                             {p.metric, c.other_metric}, {p.geo}, {}, {}});
      }
    }
    emit_chunks(out, "trend:" + p.metric + ":" + p.geo, ChunkKind::Trend, sentences);
  }
  return out;
}

ChunkSet generate_chunks(std::span<const TableRecord> records, const ForgeOptions& options) {
  ChunkSet set;
  if (records.empty()) return set;
  auto primary = generate_primary_chunks(records, options.templates);
  auto feature = generate_feature_chunks(records);
  auto trend = generate_trend_chunks(records, options.trend, options.period_key);
  set.primary = primary.size();
  set.feature = feature.size();
  set.trend = trend.size();
  set.chunks.reserve(primary.size() + feature.size() + trend.size());
  for (auto* part : {&primary, &feature, &trend}) {
    std::move(part->begin(), part->end(), std::back_inserter(set.chunks));
  }
  return set;
}

}  // namespace ledgerlens
