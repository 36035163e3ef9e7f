#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ledgerlens {

struct SeriesPoint {
  std::string period;
  double value = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

struct Anomaly {
  std::string period;
  double value = 0.0;
  double z_score = 0.0;
};

struct Correlation {
  std::string other_metric;
  double r = 0.0;
};

struct TrendReport {
  std::string metric;
  std::string geo;
  double slope = 0.0;
  double intercept = 0.0;
  double forecast = 0.0;  // fit evaluated at n + 1
  bool degenerate = false;  // every value equal: no anomalies, no correlations
  std::vector<Anomaly> anomalies;
  std::vector<Correlation> correlations;
};

struct TrendOptions {
  double anomaly_threshold = 2.0;       // |z| at or above this is flagged
  double correlation_threshold = 0.7;   // |r| at or above this is reported
  std::size_t min_points_fit = 3;
  std::size_t min_points_anomaly = 4;
};

// Ordinary least squares on x = 1..n.
LinearFit ols_fit(std::span<const double> ys);

// Population z-scores. Empty result when the standard deviation is zero.
std::vector<double> z_scores(std::span<const double> xs);

// Pearson correlation; nullopt when either side has zero variance or the
// lengths differ or are below 2.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

// Series must already be ordered by period. Fewer than min_points_fit points
// yields nullopt. Correlations are filled by the chunk generator, which sees
// the sibling metric series.
std::optional<TrendReport> analyze_trend(std::span<const SeriesPoint> series,
                                         const TrendOptions& options = {});

}  // namespace ledgerlens
