#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/epi.hpp"
#include "forge/errors.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

EpiParams sir(double beta, double gamma) {
  EpiParams p;
  p.beta_waves = {{0, beta}};
  p.gamma = gamma;
  p.N = 100'000;
  p.horizon_days = 200;
  return p;
}

}  // namespace

TEST_CASE("sampled parameters respect their ranges") {
  EpiFeatureProbabilities f;
  int has_e = 0;
  const int n = 20'000;
  for (int i = 0; i < n; ++i) {
    auto rng = substream(21, static_cast<std::uint64_t>(i));
    const EpiParams p = sample_epi_params(f, rng);
    CHECK_NOTHROW(validate(p));
    has_e += p.has_E;
    REQUIRE(p.N >= 50'000);
    REQUIRE(p.N <= 50'000'000);
    REQUIRE(p.gamma >= 0.10);
    REQUIRE(p.gamma <= 0.33);
    for (const auto& w : p.beta_waves) {
      REQUIRE(w.beta >= 0.10);
      REQUIRE(w.beta <= 1.00);
    }
    REQUIRE(p.beta_waves.size() <= 5);
  }
  // Binomial 3-sigma band around 0.70.
  CHECK(std::abs(has_e / static_cast<double>(n) - 0.70) < 3 * std::sqrt(0.21 / n));
}

TEST_CASE("all feature probabilities at zero give plain SIR") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = substream(4, s);
    const EpiParams p = sample_epi_params(EpiFeatureProbabilities::none(), rng);
    CHECK_FALSE(p.has_E);
    CHECK_FALSE(p.has_A);
    CHECK_FALSE(p.has_npi);
    CHECK_FALSE(p.has_demography);
    CHECK_FALSE(p.has_waning);
    CHECK_FALSE(p.has_superspreading);
    CHECK(p.importation_rate == 0.0);
    CHECK(p.seasonal.empty());
    CHECK(p.closed());
  }
}

TEST_CASE("invalid parameters are rejected") {
  EpiParams p = sir(0.3, 0.1);
  p.gamma = 0.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = sir(0.3, 0.1);
  p.beta_waves.push_back({0, 0.2});
  p.clinical_per_wave.push_back({});
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = sir(0.3, 0.1);
  p.seed_infected = p.N + 1;
  CHECK_THROWS_AS(validate(p), ParameterError);
  EpiFeatureProbabilities f;
  f.npi = 1.5;
  RngStream rng(1, 1);
  CHECK_THROWS_AS(sample_epi_params(f, rng), ParameterError);
}

TEST_CASE("reproduction number examples") {
  CHECK(compute_r0(sir(0.3, 0.1)) == doctest::Approx(3.0).epsilon(1e-12));

  EpiParams seir = sir(0.4, 0.2);
  seir.has_E = true;
  seir.sigma = 0.3;
  CHECK(compute_r0(seir) == doctest::Approx(2.0).epsilon(1e-12));

  EpiParams seair = sir(0.3, 0.15);
  seair.has_E = true;
  seair.has_A = true;
  seair.p_A = 0.4;
  seair.alpha = 0.5;
  CHECK(compute_r0(seair) == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(std::abs(compute_r0(seair) - oracle::ngm_spectral_radius(seair)) < 1e-9);
}

TEST_CASE("reproduction number agrees with the next-generation matrix") {
  EpiFeatureProbabilities f;
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto rng = substream(33, s);
    const EpiParams p = sample_epi_params(f, rng);
    const double r0 = compute_r0(p);
    CHECK(std::abs(r0 - oracle::ngm_spectral_radius(p)) < 1e-9 * std::max(1.0, r0));
  }
}

TEST_CASE("closed populations conserve individuals") {
  EpiFeatureProbabilities f;
  f.demography = 0;
  f.waning = 0;
  f.importation = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto rng = substream(5, s);
    EpiParams p = sample_epi_params(f, rng);
    p.N = std::min<std::int64_t>(p.N, 2'000'000);
    const auto traj = simulate_epidemic(p, rng);
    for (std::size_t t = 0; t < traj.latent.S.size(); ++t) {
      REQUIRE(traj.population(t) == p.N);
      REQUIRE(traj.latent.S[t] >= 0);
      REQUIRE(traj.latent.I[t] >= 0);
    }
  }
}

TEST_CASE("no transmission leaves only the seeds") {
  EpiParams p = sir(0.0, 0.1);
  RngStream rng(2, 2);
  const auto traj = simulate_epidemic(p, rng);
  const auto total = std::accumulate(traj.true_daily.cases.begin(), traj.true_daily.cases.end(), std::int64_t{0});
  CHECK(total == 10);
  CHECK(traj.latent.S.back() == p.N - 10);
}

TEST_CASE("mean-field limit matches the ODE") {
  EpiParams p = sir(0.4, 0.2);
  p.has_E = true;
  p.sigma = 0.3;
  p.N = 10'000'000;
  p.seed_infected = 1000;
  p.horizon_days = 250;
  RngStream rng(6, 0);
  const auto traj = simulate_epidemic(p, rng);
  const auto ode = oracle::seair_ode_incidence(p);
  const auto sim_peak = std::max_element(traj.true_daily.cases.begin(), traj.true_daily.cases.end());
  const auto ode_peak = std::max_element(ode.begin(), ode.end());
  CHECK(std::abs(static_cast<double>(*sim_peak) - *ode_peak) / *ode_peak < 0.05);
  CHECK(std::abs((sim_peak - traj.true_daily.cases.begin()) - (ode_peak - ode.begin())) <= 3);
}

TEST_CASE("effective reproduction number") {
  EpiParams p = sir(0.3, 0.1);
  p.N = 1'000'000;
  p.seed_infected = 0;
  RngStream rng(3, 3);
  auto traj = simulate_epidemic(p, rng);
  CHECK(traj.rt_daily.front() == doctest::Approx(compute_r0(p)));

  traj.latent.S.assign(traj.latent.S.size(), 0);
  const auto zero = compute_rt_series(traj, p);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("interventions scale the effective reproduction number") {
  EpiParams p = sir(0.5, 0.1);
  p.N = 1'000'000;
  p.has_npi = true;
  p.npi.trigger_threshold = 0.001;
  p.npi.relax_threshold = 0.0002;
  p.npi.reduction_factor = 0.5;
  p.npi.min_duration_days = 30;
  p.horizon_days = 300;
  RngStream rng(8, 1);
  const auto traj = simulate_epidemic(p, rng);
  REQUIRE_FALSE(traj.intervention_log.empty());

  auto unscaled = traj;
  for (std::size_t t = 0; t < unscaled.beta_effective.size(); ++t) {
    unscaled.beta_effective[t] /= traj.npi_factor[t];
  }
  const auto base = compute_rt_series(unscaled, p);
  int active = 0;
  for (std::size_t t = 0; t < base.size(); ++t) {
    if (traj.npi_factor[t] == 0.5) {
      ++active;
      CHECK(traj.rt_daily[t] == doctest::Approx(0.5 * base[t]).epsilon(1e-12));
    }
  }
  CHECK(active > 0);
  for (const auto& w : traj.intervention_log) {
    if (w.end_day < p.horizon_days) CHECK(w.end_day - w.start_day >= p.npi.min_duration_days);
  }
}

TEST_CASE("clinical outcomes") {
  EpiParams p = sir(0.3, 0.1);
  std::vector<std::int64_t> symptomatic(120, 0);
  symptomatic[0] = 100'000;

  SUBCASE("no hospitalization gives no deaths") {
    p.clinical_per_wave = {ClinicalWave{0.0, 0.5, 7.0, 17.0}};
    RngStream rng(1, 9);
    const auto out = apply_clinical_outcomes(symptomatic, p, rng);
    CHECK(std::all_of(out.hospitalizations.begin(), out.hospitalizations.end(), [](auto x) { return x == 0; }));
    CHECK(std::all_of(out.deaths.begin(), out.deaths.end(), [](auto x) { return x == 0; }));
  }

  SUBCASE("mean hospitalization delay") {
    p.clinical_per_wave = {ClinicalWave{1.0, 1.0, 7.0, 17.0}};
    RngStream rng(1, 10);
    const auto out = apply_clinical_outcomes(symptomatic, p, rng);
    double total = 0, weighted = 0;
    for (std::size_t d = 0; d < out.hospitalizations.size(); ++d) {
      total += static_cast<double>(out.hospitalizations[d]);
      weighted += static_cast<double>(d) * static_cast<double>(out.hospitalizations[d]);
    }
    CHECK(total == 100'000);
    CHECK(std::abs(weighted / total - 7.0) < 0.1);
  }

  SUBCASE("deaths never outrun hospitalizations") {
    p.clinical_per_wave = {ClinicalWave{0.3, 0.4, 6.0, 15.0}};
    RngStream rng(1, 11);
    std::vector<std::int64_t> sym(200);
    for (std::size_t t = 0; t < sym.size(); ++t) sym[t] = static_cast<std::int64_t>(500 * std::exp(-std::pow((t - 60.0) / 25.0, 2)));
    const auto out = apply_clinical_outcomes(sym, p, rng);
    std::int64_t cs = 0, ch = 0, cd = 0;
    for (std::size_t t = 0; t < sym.size(); ++t) {
      cs += sym[t];
      ch += out.hospitalizations[t];
      cd += out.deaths[t];
      REQUIRE(cd <= ch);
      REQUIRE(ch <= cs);
    }
  }
}

TEST_CASE("discretized gamma delay pmf") {
  const auto pmf = rounded_gamma_pmf(7.0, 4.0);
  double total = 0, mean = 0;
  for (std::size_t d = 0; d < pmf.size(); ++d) {
    total += pmf[d];
    mean += static_cast<double>(d) * pmf[d];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(mean - 7.0) < 0.05);
  CHECK(rounded_gamma_pmf(0.0, 4.0) == std::vector<double>{1.0});
}

TEST_CASE("seasonal factor") {
  EpiParams p;
  CHECK(seasonal_factor(p, 100) == 1.0);
  p.seasonal = {{0.2, 1, 0.0}};
  CHECK(seasonal_factor(p, 365.0 / 4) == doctest::Approx(1.2));
  p.seasonal = {{2.0, 1, 0.0}};
  CHECK(seasonal_factor(p, 3 * 365.0 / 4) == 0.05);
}
