#pragma once

// Surveillance artifacts that turn true daily counts into reported counts:
// logistic under-reporting ramp, shifted-geometric reporting delay, weekday
// multipliers and mean-one lognormal noise.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "forge/stochastics.hpp"

namespace forge {

using CountSeries = std::vector<std::int64_t>;

struct ObservationSpec {
  double report_rate_initial = 1.0;
  double report_rate_final = 1.0;
  double logistic_midpoint_frac = 0.5;
  // Per day. Non-positive means "10 / horizon", resolved against the series
  // length at application time.
  double logistic_steepness = 0.0;
  std::int64_t delay_mode_days = 0;
  double delay_success_prob = 1.0;
  std::array<double, 7> weekday_effects{1, 1, 1, 1, 1, 1, 1};
  double noise_sigma_cases = 0.0;
  double noise_sigma_hosp = 0.0;
  double noise_sigma_deaths = 0.0;

  // Spec with every stage set to the identity.
  static ObservationSpec identity() { return {}; }
};

// Throws ParameterError on out-of-domain fields.
void validate(const ObservationSpec& spec);

// Table 1 observation rows.
ObservationSpec sample_observation_spec(RngStream& rng);

// Detection probability on day t of a series of length `length`.
double report_probability(const ObservationSpec& spec, std::size_t t, std::size_t length);

CountSeries apply_underreporting(std::span<const std::int64_t> series, const ObservationSpec& spec,
                                 RngStream& rng);

// Counts landing past the end of the series are dropped.
CountSeries apply_reporting_delay(std::span<const std::int64_t> series, const ObservationSpec& spec,
                                  RngStream& rng);

// Delay pmf truncated where the geometric tail falls below 1e-12.
std::vector<double> reporting_delay_pmf(const ObservationSpec& spec);

CountSeries apply_weekday_effects(std::span<const std::int64_t> series,
                                  const std::array<double, 7>& effects);

CountSeries apply_multiplicative_noise(std::span<const std::int64_t> series, double sigma,
                                       RngStream& rng);

struct ClinicalCounts {
  CountSeries cases;
  CountSeries hospitalizations;
  CountSeries deaths;
};

// thin (cases only) -> delay -> weekday -> noise, per series.
ClinicalCounts observe(const ClinicalCounts& truth, const ObservationSpec& spec, RngStream& rng);

}  // namespace forge
