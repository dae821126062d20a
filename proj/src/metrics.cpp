#include "forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace forge {

std::vector<double> naive_forecast(std::span<const double> history, std::size_t horizon) {
  if (history.empty()) throw MetricError("naive_forecast: empty history");
  return std::vector<double>(horizon, history.back());
}

double mae(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw MetricError("mae: series lengths differ");
  if (truth.empty()) throw MetricError("mae: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(predicted[i] - truth[i]);
  return s / static_cast<double>(truth.size());
}

double forecasting_skill(double model_mae, double naive_mae) {
  if (!(naive_mae > 0.0)) throw MetricError("forecasting_skill: undefined for naive MAE <= 0");
  return 100.0 * (naive_mae - model_mae) / naive_mae;
}

double pinball_loss(std::span<const double> levels, const std::vector<std::vector<double>>& quantiles,
                    std::span<const double> truth) {
  if (levels.size() != quantiles.size()) throw MetricError("pinball_loss: one series per level expected");
  if (levels.empty() || truth.empty()) throw MetricError("pinball_loss: empty input");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(levels[j] > 0.0 && levels[j] < 1.0)) throw MetricError("pinball_loss: levels must be in (0, 1)");
    if (j > 0 && !(levels[j] > levels[j - 1])) throw MetricError("pinball_loss: levels must increase");
    if (quantiles[j].size() != truth.size()) throw MetricError("pinball_loss: misaligned lengths");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const double tau = levels[j];
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double d = truth[t] - quantiles[j][t];
      s += d >= 0.0 ? tau * d : (tau - 1.0) * d;
    }
  }
  return s / static_cast<double>(levels.size() * truth.size());
}

R0Errors r0_error_metrics(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) throw MetricError("r0_error_metrics: lengths differ");
  if (truths.empty()) throw MetricError("r0_error_metrics: empty input");
  R0Errors e;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!(truths[i] > 0.0)) throw MetricError("r0_error_metrics: truths must be > 0");
    const double d = estimates[i] - truths[i];
    e.mse += d * d;
    e.mpe += std::abs(d) / truths[i];
  }
  const auto n = static_cast<double>(truths.size());
  e.mse /= n;
  e.mpe = 100.0 * e.mpe / n;
  return e;
}

double topk_accuracy(const std::vector<std::vector<std::uint32_t>>& rankings,
                     std::span<const std::uint32_t> labels, std::size_t k) {
  if (k < 1) throw MetricError("topk_accuracy: k must be >= 1");
  if (rankings.size() != labels.size()) throw MetricError("topk_accuracy: lengths differ");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i];
    const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.size()));
    hits += std::find(r.begin(), end, labels[i]) != end;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

GrowthFit fit_exp_growth_rate(std::span<const double> early_cases) {
  GrowthFit fit;
  double st = 0.0, sy = 0.0;
  for (std::size_t t = 0; t < early_cases.size(); ++t) {
    if (!(early_cases[t] > 0.0)) {
      ++fit.zeros_dropped;
      continue;
    }
    const auto x = static_cast<double>(t);
    const double y = std::log(early_cases[t]);
    st += x;
    sy += y;
    ++fit.points_used;
  }
  if (fit.points_used < 5) {
    throw InsufficientDataError("fit_exp_growth_rate: " + std::to_string(fit.points_used) +
                                " positive points, need 5");
  }
  // Centered sums for accuracy.
  const auto n = static_cast<double>(fit.points_used);
  const double tbar = st / n, ybar = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < early_cases.size(); ++t) {
    if (!(early_cases[t] > 0.0)) continue;
    const double dx = static_cast<double>(t) - tbar;
    sxx += dx * dx;
    sxy += dx * (std::log(early_cases[t]) - ybar);
  }
  fit.rate = sxy / sxx;
  fit.intercept = ybar - fit.rate * tbar;
  return fit;
}

double r0_from_growth(double r, std::optional<double> latent_mean, double infectious_mean) {
  if (!(infectious_mean > 0.0)) throw MetricError("r0_from_growth: infectious mean must be > 0");
  if (latent_mean && !(*latent_mean > 0.0)) throw MetricError("r0_from_growth: latent mean must be > 0");
  const double infectious = 1.0 + r * infectious_mean;
  return latent_mean ? (1.0 + r * *latent_mean) * infectious : infectious;
}

SkillReport evaluate_skill(const std::vector<TruthPoint>& truth, const std::vector<ForecastPoint>& forecasts,
                           const std::vector<QuantilePoint>& quantiles) {
  // Per location: date -> (series index, value), dates sorted lexically.
  struct Series {
    std::vector<std::string> dates;
    std::vector<double> values;
    std::map<std::string, std::size_t> index;
  };
  std::map<std::string, Series> series;
  {
    std::map<std::string, std::map<std::string, double>> raw;
    for (const auto& p : truth) raw[p.location][p.date] = p.value;
    for (auto& [loc, by_date] : raw) {
      Series& s = series[loc];
      for (auto& [d, v] : by_date) {
        s.index[d] = s.dates.size();
        s.dates.push_back(d);
        s.values.push_back(v);
      }
    }
  }

  struct Acc {
    double model = 0.0, naive = 0.0;
    std::size_t n = 0;
  };
  Acc pooled;
  std::map<std::string, Acc> by_loc;
  std::map<int, Acc> by_h;
  SkillReport rep;
  for (const auto& f : forecasts) {
    auto sit = series.find(f.location);
    if (sit == series.end() || f.horizon < 1) {
      ++rep.skipped;
      continue;
    }
    auto iit = sit->second.index.find(f.date);
    if (iit == sit->second.index.end() || iit->second < static_cast<std::size_t>(f.horizon)) {
      ++rep.skipped;
      continue;
    }
    const double y = sit->second.values[iit->second];
    const double naive = sit->second.values[iit->second - static_cast<std::size_t>(f.horizon)];
    for (Acc* a : {&pooled, &by_loc[f.location], &by_h[f.horizon]}) {
      a->model += std::abs(f.value - y);
      a->naive += std::abs(naive - y);
      a->n += 1;
    }
  }
  auto finish = [](const Acc& a) {
    SkillBreakdown b;
    b.count = a.n;
    if (a.n == 0) {
      b.skill = std::numeric_limits<double>::quiet_NaN();
      return b;
    }
    b.model_mae = a.model / static_cast<double>(a.n);
    b.naive_mae = a.naive / static_cast<double>(a.n);
    b.skill = b.naive_mae > 0.0 ? forecasting_skill(b.model_mae, b.naive_mae)
                                : std::numeric_limits<double>::quiet_NaN();
    return b;
  };
  rep.pooled = finish(pooled);
  for (const auto& [k, a] : by_loc) rep.by_location[k] = finish(a);
  for (const auto& [k, a] : by_h) rep.by_horizon[k] = finish(a);

  if (!quantiles.empty()) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& q : quantiles) {
      if (!(q.level > 0.0 && q.level < 1.0)) throw MetricError("quantile levels must be in (0, 1)");
      auto sit = series.find(q.location);
      if (sit == series.end()) continue;
      auto iit = sit->second.index.find(q.date);
      if (iit == sit->second.index.end()) continue;
      const double d = sit->second.values[iit->second] - q.value;
      s += d >= 0.0 ? q.level * d : (q.level - 1.0) * d;
      ++n;
    }
    if (n > 0) rep.pinball = s / static_cast<double>(n);
  }
  return rep;
}

}  // namespace forge
