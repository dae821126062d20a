#pragma once

// Forecast and inference metrics plus simple analytic baselines.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientDataError : public MetricError {
 public:
  using MetricError::MetricError;
};

std::vector<double> naive_forecast(std::span<const double> history, std::size_t horizon);

double mae(std::span<const double> predicted, std::span<const double> truth);

// 100 * (naive - model) / naive.
double forecasting_skill(double model_mae, double naive_mae);

// Quantile forecasts: q[level][t].
double pinball_loss(std::span<const double> levels, const std::vector<std::vector<double>>& quantiles,
                    std::span<const double> truth);

struct R0Errors {
  double mse = 0.0;
  double mpe = 0.0;  // percent
};
R0Errors r0_error_metrics(std::span<const double> estimates, std::span<const double> truths);

// rankings[i] is best-first; a missing label counts as a miss.
double topk_accuracy(const std::vector<std::vector<std::uint32_t>>& rankings,
                     std::span<const std::uint32_t> labels, std::size_t k);

struct GrowthFit {
  double rate = 0.0;       // per day
  double intercept = 0.0;  // ln cases at t = 0
  std::size_t points_used = 0;
  std::size_t zeros_dropped = 0;
};

inline constexpr std::size_t kGrowthWindowDays = 21;

// Least-squares slope of ln(c_t) on t over the positive entries.
GrowthFit fit_exp_growth_rate(std::span<const double> early_cases);

// (1 + r L)(1 + r D) with a latent stage, 1 + r D without.
double r0_from_growth(double r, std::optional<double> latent_mean, double infectious_mean);

// --- pooled skill evaluation ------------------------------------------------

struct TruthPoint {
  std::string location;
  std::string date;
  double value = 0.0;
};

// `date` is the target date; horizon counts truth-series steps back to the
// forecast origin.
struct ForecastPoint {
  std::string location;
  std::string date;
  int horizon = 1;
  double value = 0.0;
};

struct QuantilePoint {
  std::string location;
  std::string date;
  int horizon = 1;
  double level = 0.5;
  double value = 0.0;
};

struct SkillBreakdown {
  double model_mae = 0.0;
  double naive_mae = 0.0;
  double skill = 0.0;  // NaN when naive_mae is 0
  std::size_t count = 0;
};

struct SkillReport {
  SkillBreakdown pooled;
  std::map<std::string, SkillBreakdown> by_location;
  std::map<int, SkillBreakdown> by_horizon;
  std::optional<double> pinball;
  std::size_t skipped = 0;  // forecasts without truth or naive origin
};

// Pools every (location, horizon, date) absolute error before the ratio.
SkillReport evaluate_skill(const std::vector<TruthPoint>& truth,
                           const std::vector<ForecastPoint>& forecasts,
                           const std::vector<QuantilePoint>& quantiles = {});

}  // namespace forge
