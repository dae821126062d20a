#include "forge/observation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forge/errors.hpp"

namespace forge {
namespace {

std::int64_t round_half_even_nonneg(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::int64_t>(std::nearbyint(x));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("ObservationSpec: " + what);
}

enum StreamTag : std::uint64_t {
  kThin = 1,
  kDelayCases = 2,
  kDelayHosp = 3,
  kDelayDeaths = 4,
  kNoiseCases = 5,
  kNoiseHosp = 6,
  kNoiseDeaths = 7,
};

}  // namespace

void validate(const ObservationSpec& s) {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(s.report_rate_initial) && prob(s.report_rate_final), "report rates must be in [0,1]");
  require(s.logistic_midpoint_frac >= 0.0 && s.logistic_midpoint_frac <= 1.0,
          "logistic midpoint must be a fraction of the horizon");
  require(s.delay_mode_days >= 0, "delay mode must be >= 0");
  require(s.delay_success_prob > 0.0 && s.delay_success_prob <= 1.0,
          "delay success probability must be in (0,1]");
  for (double w : s.weekday_effects) require(w > 0.0 && std::isfinite(w), "weekday effects must be > 0");
  require(s.noise_sigma_cases >= 0 && s.noise_sigma_hosp >= 0 && s.noise_sigma_deaths >= 0,
          "noise sigmas must be >= 0");
}

ObservationSpec sample_observation_spec(RngStream& rng) {
  ObservationSpec s;
  s.report_rate_initial = uniform(rng, 0.05, 0.40);
  s.report_rate_final = uniform(rng, std::max(0.25, s.report_rate_initial), 0.85);
  s.logistic_midpoint_frac = uniform(rng, 0.2, 0.7);
  s.logistic_steepness = 0.0;
  s.delay_mode_days = uniform_int(rng, 0, 3);
  s.delay_success_prob = 0.5;
  for (double& w : s.weekday_effects) w = std::max(1e-3, normal(rng, 1.0, 0.05));
  s.noise_sigma_cases = uniform(rng, 0.15, 0.25);
  s.noise_sigma_hosp = uniform(rng, 0.10, 0.15);
  s.noise_sigma_deaths = uniform(rng, 0.05, 0.10);
  return s;
}

double report_probability(const ObservationSpec& spec, std::size_t t, std::size_t length) {
  const double r0 = spec.report_rate_initial;
  const double r1 = spec.report_rate_final;
  if (r0 == r1) return r0;
  const double horizon = std::max<double>(1.0, static_cast<double>(length));
  const double steep = spec.logistic_steepness > 0.0 ? spec.logistic_steepness : 10.0 / horizon;
  const double mid = spec.logistic_midpoint_frac * horizon;
  const double logistic = 1.0 / (1.0 + std::exp(-steep * (static_cast<double>(t) - mid)));
  return r0 + (r1 - r0) * logistic;
}

CountSeries apply_underreporting(std::span<const std::int64_t> series, const ObservationSpec& spec,
                                 RngStream& rng) {
  CountSeries out(series.size(), 0);
  for (std::size_t t = 0; t < series.size(); ++t) {
    out[t] = binomial(rng, series[t], report_probability(spec, t, series.size()));
  }
  return out;
}

std::vector<double> reporting_delay_pmf(const ObservationSpec& spec) {
  const auto mode = static_cast<std::size_t>(spec.delay_mode_days);
  std::vector<double> pmf(mode, 0.0);
  const double p = spec.delay_success_prob;
  if (p >= 1.0) {
    pmf.push_back(1.0);
    return pmf;
  }
  double tail = 1.0;
  double mass = p;
  while (tail > 1e-12) {
    pmf.push_back(mass);
    tail -= mass;
    mass *= (1.0 - p);
  }
  return pmf;
}

CountSeries apply_reporting_delay(std::span<const std::int64_t> series, const ObservationSpec& spec,
                                  RngStream& rng) {
  const std::vector<double> pmf = reporting_delay_pmf(spec);
  const std::size_t n = series.size();
  CountSeries out(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    if (series[t] <= 0) continue;
    const std::size_t reach = std::min(pmf.size(), n - t);
    multinomial_add(rng, series[t], std::span<const double>(pmf.data(), reach),
                    std::span<std::int64_t>(out.data() + t, reach));
  }
  return out;
}

CountSeries apply_weekday_effects(std::span<const std::int64_t> series,
                                  const std::array<double, 7>& effects) {
  CountSeries out(series.size(), 0);
  for (std::size_t t = 0; t < series.size(); ++t) {
    out[t] = round_half_even_nonneg(static_cast<double>(series[t]) * effects[t % 7]);
  }
  return out;
}

CountSeries apply_multiplicative_noise(std::span<const std::int64_t> series, double sigma,
                                       RngStream& rng) {
  if (sigma < 0.0) throw ParameterError("noise sigma must be >= 0");
  CountSeries out(series.begin(), series.end());
  if (sigma == 0.0) return out;
  const double mu = -0.5 * sigma * sigma;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const double factor = lognormal(rng, mu, sigma);
    out[t] = round_half_even_nonneg(static_cast<double>(series[t]) * factor);
  }
  return out;
}

ClinicalCounts observe(const ClinicalCounts& truth, const ObservationSpec& spec, RngStream& rng) {
  validate(spec);
  if (truth.hospitalizations.size() != truth.cases.size() ||
      truth.deaths.size() != truth.cases.size()) {
    throw ParameterError("observe: case, hospitalization and death series differ in length");
  }
  RngStream thin = rng.child(kThin);
  RngStream dc = rng.child(kDelayCases), dh = rng.child(kDelayHosp), dd = rng.child(kDelayDeaths);
  RngStream nc = rng.child(kNoiseCases), nh = rng.child(kNoiseHosp), nd = rng.child(kNoiseDeaths);

  ClinicalCounts out;
  out.cases = apply_underreporting(truth.cases, spec, thin);
  out.cases = apply_reporting_delay(out.cases, spec, dc);
  out.cases = apply_weekday_effects(out.cases, spec.weekday_effects);
  out.cases = apply_multiplicative_noise(out.cases, spec.noise_sigma_cases, nc);

  out.hospitalizations = apply_reporting_delay(truth.hospitalizations, spec, dh);
  out.hospitalizations = apply_weekday_effects(out.hospitalizations, spec.weekday_effects);
  out.hospitalizations = apply_multiplicative_noise(out.hospitalizations, spec.noise_sigma_hosp, nh);

  out.deaths = apply_reporting_delay(truth.deaths, spec, dd);
  out.deaths = apply_weekday_effects(out.deaths, spec.weekday_effects);
  out.deaths = apply_multiplicative_noise(out.deaths, spec.noise_sigma_deaths, nd);
  return out;
}

}  // namespace forge
