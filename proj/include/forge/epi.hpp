#pragma once

// Stochastic SEAIR-family epidemic simulator with multi-wave transmission,
// seasonal forcing, super-spreading, threshold-triggered interventions,
// demography, importation and clinical outcomes.

#include <cstdint>
#include <vector>

#include "forge/observation.hpp"
#include "forge/stochastics.hpp"

namespace forge {

struct BetaWave {
  std::int64_t start_day = 0;
  double beta = 0.0;
};

struct SeasonalHarmonic {
  double amplitude = 0.0;
  int harmonic = 1;  // multiples of the annual frequency
  double phase = 0.0;
};

struct ClinicalWave {
  double p_hosp = 0.0;
  double p_death_given_hosp = 0.0;
  double hosp_delay_mean = 7.0;
  double death_delay_mean = 17.0;
};

struct InterventionSpec {
  double trigger_threshold = 0.0;  // daily new cases, as a fraction of N
  double relax_threshold = 0.0;
  double reduction_factor = 0.0;   // beta -> beta * (1 - reduction_factor)
  std::int64_t min_duration_days = 0;
  std::int64_t relax_persistence_days = 7;
};

struct EpiParams {
  std::int64_t N = 1'000'000;
  bool has_E = false;
  bool has_A = false;
  bool has_waning = false;
  bool has_demography = false;
  bool has_npi = false;
  bool has_superspreading = false;
  std::vector<BetaWave> beta_waves{{0, 0.3}};
  double gamma = 0.1;
  double sigma = 0.3;
  double omega = 0.0;
  double mu = 0.0;
  double p_A = 0.0;
  double alpha = 1.0;
  std::vector<SeasonalHarmonic> seasonal;
  double dispersion_k = 1.0;
  double importation_rate = 0.0;
  InterventionSpec npi;
  // One entry per beta wave.
  std::vector<ClinicalWave> clinical_per_wave{ClinicalWave{}};
  std::int64_t horizon_days = 365;
  std::int64_t seed_infected = 10;
  // Tau-leap substeps per day; 1 is a plain daily step.
  int substeps_per_day = 16;
  // Gamma shape for clinical delays (scale = mean / shape).
  double delay_gamma_shape = 4.0;

  // Closed population: no births/deaths, importation or waning immunity.
  bool closed() const { return !has_demography && importation_rate == 0.0 && !has_waning; }
  std::size_t wave_index(std::int64_t day) const;
  double beta_at(std::int64_t day) const;
};

// Throws ParameterError when an invariant is violated.
void validate(const EpiParams& params);

struct EpiFeatureProbabilities {
  double exposed = 0.70;
  double asymptomatic = 0.50;
  double npi = 0.25;
  double demography = 0.80;
  double waning = 0.50;
  double superspreading = 0.50;
  double importation = 1.0;
  double seasonality = 1.0;

  static EpiFeatureProbabilities none() { return {0, 0, 0, 0, 0, 0, 0, 0}; }
};

EpiParams sample_epi_params(const EpiFeatureProbabilities& features, RngStream& rng);

// Seasonal multiplier s(t) = 1 + sum a_k sin(2 pi k t / 365 + phi_k), floored at 0.05.
double seasonal_factor(const EpiParams& params, double day);

struct InterventionWindow {
  std::int64_t start_day = 0;
  std::int64_t end_day = 0;  // exclusive
  double reduction = 0.0;
};

struct LatentSeries {
  CountSeries S, E, A, I, R;
};

struct EpiTrajectory {
  ClinicalCounts true_daily;      // cases = all new infections
  CountSeries symptomatic_daily;  // entries into I
  LatentSeries latent;            // start-of-day compartment counts
  std::vector<double> beta_effective;  // beta(t) * s(t) * npi(t), excluding eta
  std::vector<double> npi_factor;      // 1 or (1 - reduction) per day
  std::vector<double> rt_daily;
  ClinicalCounts reported_daily;  // filled by observe()
  std::vector<InterventionWindow> intervention_log;
  EpiParams params_snapshot;
  ObservationSpec observation_snapshot;

  std::int64_t population(std::size_t day) const;
};

// Runs the dynamics, clinical outcomes and Rt. Reported series are left
// empty; see observe().
EpiTrajectory simulate_epidemic(const EpiParams& params, RngStream& rng);

// Basic reproduction number from the next-generation matrix of the sampled
// configuration, using the first-wave beta and s = 1.
double compute_r0(const EpiParams& params);

// Same expression with a different transmission rate.
double reproduction_number(const EpiParams& params, double beta);

std::vector<double> compute_rt_series(const EpiTrajectory& traj, const EpiParams& params);

struct ClinicalOutcome {
  CountSeries hospitalizations;
  CountSeries deaths;
};

// `symptomatic` is indexed by the day of symptomatic infection; events past
// the series end are dropped.
ClinicalOutcome apply_clinical_outcomes(std::span<const std::int64_t> symptomatic,
                                        const EpiParams& params, RngStream& rng);

// Discretized gamma delay pmf: P(round(X) = d), X ~ Gamma(shape, mean/shape),
// truncated where the remaining tail is below 1e-12.
std::vector<double> rounded_gamma_pmf(double mean, double shape);

}  // namespace forge
