#include "ledgerlens/trend.hpp"

#include <cmath>

namespace ledgerlens {

namespace {

// Guards the ">= threshold" test against representation error, e.g. 9.6/4.8.
constexpr double kThresholdSlack = 1e-9;

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

LinearFit ols_fit(std::span<const double> ys) {
  const std::size_t n = ys.size();
  if (n == 0) return {};
  if (n == 1) return {0.0, ys[0]};
  const double x_mean = (static_cast<double>(n) + 1.0) / 2.0;
  const double y_mean = mean_of(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i + 1) - x_mean;
    sxy += dx * (ys[i] - y_mean);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  return {slope, y_mean - slope * x_mean};
}

std::vector<double> z_scores(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
  if (sd == 0.0) return {};
  std::vector<double> z;
  z.reserve(xs.size());
  for (double x : xs) z.push_back((x - m) / sd);
  return z;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

std::optional<TrendReport> analyze_trend(std::span<const SeriesPoint> series,
                                         const TrendOptions& options) {
  if (series.size() < options.min_points_fit) return std::nullopt;
  std::vector<double> ys;
  ys.reserve(series.size());
  for (const auto& p : series) ys.push_back(p.value);

  TrendReport report;
  const auto fit = ols_fit(ys);
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  report.forecast = fit.intercept + fit.slope * static_cast<double>(ys.size() + 1);

  const auto z = z_scores(ys);
  report.degenerate = z.empty();
  if (report.degenerate) {
    report.slope = 0.0;
    report.intercept = ys.front();
    report.forecast = ys.front();
  }
  if (!report.degenerate && ys.size() >= options.min_points_anomaly) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::fabs(z[i]) >= options.anomaly_threshold - kThresholdSlack) {
        report.anomalies.push_back({series[i].period, series[i].value, z[i]});
      }
    }
  }
  return report;
}

}  // namespace ledgerlens
