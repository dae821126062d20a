#include "forge/epi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "forge/errors.hpp"

namespace forge {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("EpiParams: " + what);
}

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

enum StreamTag : std::uint64_t { kDynamics = 11, kClinical = 12 };

// Splits `n` events between two competing destinations with rates a and b.
std::int64_t split(RngStream& rng, std::int64_t n, double a, double b) {
  if (n == 0) return 0;
  if (b <= 0.0) return n;
  return binomial(rng, n, a / (a + b));
}

// Gamma(k, rate k): mean one, variance 1/k.
double gamma_variate_mean_one(RngStream& rng, double k) { return gamma(rng, k, 1.0 / k); }

}  // namespace

std::size_t EpiParams::wave_index(std::int64_t day) const {
  std::size_t w = 0;
  for (std::size_t i = 1; i < beta_waves.size(); ++i) {
    if (beta_waves[i].start_day <= day) w = i;
  }
  return w;
}

double EpiParams::beta_at(std::int64_t day) const { return beta_waves[wave_index(day)].beta; }

void validate(const EpiParams& p) {
  require(p.N > 0, "N must be positive");
  require(p.seed_infected >= 0 && p.seed_infected <= p.N, "seed_infected must be in [0, N]");
  require(p.horizon_days > 0, "horizon_days must be positive");
  require(!p.beta_waves.empty() && p.beta_waves.size() <= 5, "1-5 beta waves required");
  require(p.beta_waves.front().start_day == 0, "first beta wave must start on day 0");
  for (std::size_t i = 0; i < p.beta_waves.size(); ++i) {
    require(p.beta_waves[i].beta >= 0.0 && std::isfinite(p.beta_waves[i].beta), "beta must be >= 0");
    if (i > 0) require(p.beta_waves[i].start_day > p.beta_waves[i - 1].start_day,
                       "beta wave start days must increase");
  }
  require(p.clinical_per_wave.size() == p.beta_waves.size(),
          "one clinical entry per beta wave required");
  for (const auto& c : p.clinical_per_wave) {
    require(is_prob(c.p_hosp) && is_prob(c.p_death_given_hosp), "clinical probabilities in [0,1]");
    require(c.hosp_delay_mean > 0 && c.death_delay_mean > 0, "clinical delay means must be > 0");
  }
  require(p.gamma > 0, "gamma must be > 0");
  require(!p.has_E || p.sigma > 0, "sigma must be > 0 with an exposed compartment");
  require(p.omega >= 0 && p.mu >= 0, "omega and mu must be >= 0");
  require(is_prob(p.p_A), "p_A must be in [0,1]");
  require(p.alpha >= 0, "alpha must be >= 0");
  require(!p.has_superspreading || p.dispersion_k > 0, "dispersion_k must be > 0");
  require(is_prob(p.importation_rate), "importation_rate is a daily probability");
  if (p.has_npi) {
    require(p.npi.reduction_factor > 0 && p.npi.reduction_factor < 1, "NPI reduction in (0,1)");
    require(p.npi.trigger_threshold > p.npi.relax_threshold, "NPI trigger must exceed relax");
    require(p.npi.min_duration_days >= 0 && p.npi.relax_persistence_days >= 0,
            "NPI durations must be >= 0");
  }
  require(p.substeps_per_day >= 1, "substeps_per_day must be >= 1");
  require(p.delay_gamma_shape > 0, "delay_gamma_shape must be > 0");
}

EpiParams sample_epi_params(const EpiFeatureProbabilities& f, RngStream& rng) {
  for (double q : {f.exposed, f.asymptomatic, f.npi, f.demography, f.waning, f.superspreading,
                   f.importation, f.seasonality}) {
    if (!is_prob(q)) throw ParameterError("feature probabilities must be in [0,1]");
  }
  EpiParams p;
  p.N = std::llround(log_uniform(rng, 5e4, 5e7));
  p.has_E = bernoulli(rng, f.exposed);
  p.has_A = bernoulli(rng, f.asymptomatic);
  p.has_npi = bernoulli(rng, f.npi);
  p.has_demography = bernoulli(rng, f.demography);
  p.has_waning = bernoulli(rng, f.waning);
  p.has_superspreading = bernoulli(rng, f.superspreading);
  const bool importation = bernoulli(rng, f.importation);
  const bool seasonality = bernoulli(rng, f.seasonality);

  p.horizon_days = uniform_int(rng, 365, 730);

  // Every scalar is drawn regardless of flags so the draw sequence does not
  // depend on the configuration; inactive ones are ignored by the dynamics.
  const auto waves = static_cast<std::size_t>(uniform_int(rng, 1, 5));
  std::vector<std::int64_t> starts{0};
  while (starts.size() < waves) {
    const std::int64_t day = uniform_int(rng, 1, p.horizon_days - 1);
    if (std::find(starts.begin(), starts.end(), day) == starts.end()) starts.push_back(day);
  }
  std::sort(starts.begin(), starts.end());
  p.beta_waves.clear();
  p.clinical_per_wave.clear();
  for (std::int64_t start : starts) {
    p.beta_waves.push_back({start, uniform(rng, 0.10, 1.00)});
    ClinicalWave c;
    c.p_hosp = uniform(rng, 0.02, 0.15);
    c.p_death_given_hosp = uniform(rng, 0.05, 0.30);
    c.hosp_delay_mean = uniform(rng, 5.0, 12.0);
    c.death_delay_mean = uniform(rng, 14.0, 21.0);
    p.clinical_per_wave.push_back(c);
  }

  p.gamma = uniform(rng, 0.10, 0.33);
  p.sigma = uniform(rng, 0.20, 0.40);
  p.omega = uniform(rng, 0.001, 0.0075);
  p.mu = uniform(rng, 0.0, 1.0 / 365.0);
  p.p_A = uniform(rng, 0.10, 0.70);
  p.alpha = uniform(rng, 0.30, 1.00);
  p.dispersion_k = uniform(rng, 0.10, 1.00);
  const double import_rate = log_uniform(rng, 1e-4, 1e-2);
  p.importation_rate = importation ? import_rate : 0.0;

  const auto harmonics = static_cast<int>(uniform_int(rng, 1, 4));
  std::vector<SeasonalHarmonic> seasonal;
  for (int k = 1; k <= harmonics; ++k) {
    SeasonalHarmonic h;
    h.harmonic = k;
    h.amplitude = uniform(rng, 0.05, 0.20);
    h.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    seasonal.push_back(h);
  }
  if (seasonality) p.seasonal = std::move(seasonal);

  const double trigger = uniform(rng, 0.001, 0.01);
  const double relax = uniform(rng, 0.0002, std::min(0.002, trigger));
  p.npi.trigger_threshold = trigger;
  p.npi.relax_threshold = relax;
  p.npi.reduction_factor = uniform(rng, 0.20, 0.60);
  p.npi.min_duration_days = std::llround(uniform(rng, 14.0, 120.0));
  p.npi.relax_persistence_days = 7;

  p.seed_infected = uniform_int(rng, 1, 10);
  return p;
}

double seasonal_factor(const EpiParams& params, double day) {
  double s = 1.0;
  for (const auto& h : params.seasonal) {
    s += h.amplitude * std::sin(2.0 * std::numbers::pi * h.harmonic * day / 365.0 + h.phase);
  }
  return std::max(0.05, s);
}

std::int64_t EpiTrajectory::population(std::size_t day) const {
  return latent.S[day] + latent.E[day] + latent.A[day] + latent.I[day] + latent.R[day];
}

double reproduction_number(const EpiParams& p, double beta) {
  const double mu = p.has_demography ? p.mu : 0.0;
  const double p_a = p.has_A ? p.p_A : 0.0;
  const double latent = p.has_E ? p.sigma / (p.sigma + mu) : 1.0;
  return beta * latent * ((1.0 - p_a) + p.alpha * p_a) / (p.gamma + mu);
}

double compute_r0(const EpiParams& params) {
  return reproduction_number(params, params.beta_waves.front().beta);
}

std::vector<double> compute_rt_series(const EpiTrajectory& traj, const EpiParams& params) {
  const std::size_t days = traj.latent.S.size();
  std::vector<double> rt(days, 0.0);
  for (std::size_t t = 0; t < days; ++t) {
    const std::int64_t n = traj.population(t);
    if (n <= 0) continue;
    const double beta = t < traj.beta_effective.size()
                            ? traj.beta_effective[t]
                            : params.beta_at(static_cast<std::int64_t>(t)) *
                                  seasonal_factor(params, static_cast<double>(t));
    rt[t] = reproduction_number(params, beta) * static_cast<double>(traj.latent.S[t]) /
            static_cast<double>(n);
  }
  return rt;
}

std::vector<double> rounded_gamma_pmf(double mean, double shape) {
  if (mean <= 0.0) return {1.0};
  const double scale = mean / shape;
  std::vector<double> pmf;
  double prev = 0.0;
  for (int d = 0;; ++d) {
    const double cdf = boost::math::gamma_p(shape, (d + 0.5) / scale);
    pmf.push_back(cdf - prev);
    prev = cdf;
    if (1.0 - cdf < 1e-12 || d > 10000) break;
  }
  return pmf;
}

ClinicalOutcome apply_clinical_outcomes(std::span<const std::int64_t> symptomatic,
                                        const EpiParams& params, RngStream& rng) {
  const std::size_t days = symptomatic.size();
  const std::size_t waves = params.clinical_per_wave.size();
  ClinicalOutcome out{CountSeries(days, 0), CountSeries(days, 0)};

  std::vector<std::vector<double>> hosp_pmf(waves), death_pmf(waves);
  for (std::size_t w = 0; w < waves; ++w) {
    const auto& c = params.clinical_per_wave[w];
    hosp_pmf[w] = rounded_gamma_pmf(c.hosp_delay_mean, params.delay_gamma_shape);
    death_pmf[w] = rounded_gamma_pmf(std::max(0.0, c.death_delay_mean - c.hosp_delay_mean),
                                     params.delay_gamma_shape);
  }

  // Hospitalizations by admission day, split by the wave of infection so the
  // right death probability applies.
  std::vector<CountSeries> admitted(waves, CountSeries(days, 0));
  for (std::size_t t = 0; t < days; ++t) {
    if (symptomatic[t] <= 0) continue;
    const std::size_t w = params.wave_index(static_cast<std::int64_t>(t));
    const std::int64_t h = binomial(rng, symptomatic[t], params.clinical_per_wave[w].p_hosp);
    if (h == 0) continue;
    const std::size_t reach = std::min(hosp_pmf[w].size(), days - t);
    multinomial_add(rng, h, std::span<const double>(hosp_pmf[w].data(), reach),
                    std::span<std::int64_t>(admitted[w].data() + t, reach));
  }
  for (std::size_t w = 0; w < waves; ++w) {
    for (std::size_t u = 0; u < days; ++u) {
      const std::int64_t c = admitted[w][u];
      if (c == 0) continue;
      out.hospitalizations[u] += c;
      const std::int64_t d = binomial(rng, c, params.clinical_per_wave[w].p_death_given_hosp);
      if (d == 0) continue;
      const std::size_t reach = std::min(death_pmf[w].size(), days - u);
      multinomial_add(rng, d, std::span<const double>(death_pmf[w].data(), reach),
                      std::span<std::int64_t>(out.deaths.data() + u, reach));
    }
  }
  return out;
}

EpiTrajectory simulate_epidemic(const EpiParams& params, RngStream& rng) {
  validate(params);
  RngStream dyn = rng.child(kDynamics);
  RngStream clin = rng.child(kClinical);

  const auto days = static_cast<std::size_t>(params.horizon_days);
  const double mu = params.has_demography ? params.mu : 0.0;
  const double omega = params.has_waning ? params.omega : 0.0;
  const double p_a = params.has_A ? params.p_A : 0.0;
  const double sigma = params.sigma;
  const double gamma = params.gamma;
  const double dt = 1.0 / params.substeps_per_day;

  EpiTrajectory traj;
  traj.params_snapshot = params;
  auto& lat = traj.latent;
  for (auto* s : {&lat.S, &lat.E, &lat.A, &lat.I, &lat.R}) s->assign(days, 0);
  traj.true_daily.cases.assign(days, 0);
  traj.symptomatic_daily.assign(days, 0);
  traj.beta_effective.assign(days, 0.0);
  traj.npi_factor.assign(days, 1.0);

  std::int64_t S = params.N - params.seed_infected, E = 0, A = 0, I = params.seed_infected, R = 0;
  traj.true_daily.cases[0] += params.seed_infected;
  traj.symptomatic_daily[0] += params.seed_infected;

  bool npi_active = false;
  std::int64_t npi_start = 0;
  std::int64_t below_days = 0;
  const double n0 = static_cast<double>(params.N);

  for (std::size_t t = 0; t < days; ++t) {
    lat.S[t] = S; lat.E[t] = E; lat.A[t] = A; lat.I[t] = I; lat.R[t] = R;
    const auto day = static_cast<std::int64_t>(t);

    if (params.has_npi && t > 0) {
      const double cases = static_cast<double>(traj.true_daily.cases[t - 1]);
      if (!npi_active) {
        if (cases > params.npi.trigger_threshold * n0) {
          npi_active = true;
          npi_start = day;
          below_days = 0;
        }
      } else {
        below_days = cases < params.npi.relax_threshold * n0 ? below_days + 1 : 0;
        if (day - npi_start >= params.npi.min_duration_days &&
            below_days >= params.npi.relax_persistence_days) {
          traj.intervention_log.push_back({npi_start, day, params.npi.reduction_factor});
          npi_active = false;
        }
      }
    }
    const double npi = npi_active ? 1.0 - params.npi.reduction_factor : 1.0;
    traj.npi_factor[t] = npi;
    const double beta_eff = params.beta_at(day) * seasonal_factor(params, static_cast<double>(t)) * npi;
    traj.beta_effective[t] = beta_eff;
    const double eta = params.has_superspreading
                           ? gamma_variate_mean_one(dyn, params.dispersion_k)
                           : 1.0;

    for (int step = 0; step < params.substeps_per_day; ++step) {
      const std::int64_t pop = S + E + A + I + R;
      const double lambda =
          pop > 0 ? beta_eff * eta * (static_cast<double>(I) + params.alpha * static_cast<double>(A)) /
                        static_cast<double>(pop)
                  : 0.0;

      const std::int64_t s_exit = binomial(dyn, S, event_probability(lambda + mu, dt));
      const std::int64_t infections = split(dyn, s_exit, lambda, mu);

      std::int64_t progressed = 0, e_exit = 0;
      if (params.has_E) {
        e_exit = binomial(dyn, E, event_probability(sigma + mu, dt));
        progressed = split(dyn, e_exit, sigma, mu);
      }
      const std::int64_t a_exit = binomial(dyn, A, event_probability(gamma + mu, dt));
      const std::int64_t a_rec = split(dyn, a_exit, gamma, mu);
      const std::int64_t i_exit = binomial(dyn, I, event_probability(gamma + mu, dt));
      const std::int64_t i_rec = split(dyn, i_exit, gamma, mu);
      const std::int64_t r_exit = binomial(dyn, R, event_probability(omega + mu, dt));
      const std::int64_t waned = split(dyn, r_exit, omega, mu);
      const std::int64_t births = mu > 0.0 ? poisson(dyn, mu * static_cast<double>(pop) * dt) : 0;

      // Entrants to the infectious stage: from E when present, otherwise
      // directly from S.
      const std::int64_t entering = params.has_E ? progressed : infections;
      const std::int64_t to_a = params.has_A ? binomial(dyn, entering, p_a) : 0;
      const std::int64_t to_i = entering - to_a;

      S += births + waned - s_exit;
      if (params.has_E) E += infections - e_exit;
      A += to_a - a_exit;
      I += to_i - i_exit;
      R += a_rec + i_rec - r_exit;

      traj.true_daily.cases[t] += infections;
      traj.symptomatic_daily[t] += to_i;
    }

    if (params.importation_rate > 0.0 && bernoulli(dyn, params.importation_rate)) {
      traj.true_daily.cases[t] += 1;
      if (params.has_E && bernoulli(dyn, 0.5)) {
        E += 1;
      } else {
        I += 1;
        traj.symptomatic_daily[t] += 1;
      }
    }
  }
  if (npi_active) {
    traj.intervention_log.push_back({npi_start, params.horizon_days, params.npi.reduction_factor});
  }

  ClinicalOutcome clinical = apply_clinical_outcomes(traj.symptomatic_daily, params, clin);
  traj.true_daily.hospitalizations = std::move(clinical.hospitalizations);
  traj.true_daily.deaths = std::move(clinical.deaths);
  traj.rt_daily = compute_rt_series(traj, params);
  return traj;
}

}  // namespace forge
