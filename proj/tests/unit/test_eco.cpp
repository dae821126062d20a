#include <doctest.h>

#include <cmath>

#include "forge/eco.hpp"
#include "forge/errors.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

ButterflyParams single_species(double r, double K, double N0) {
  ButterflyParams p;
  p.S = 1;
  p.r = {r};
  p.K = {K};
  p.N0 = {N0};
  p.alpha = {0.0};
  p.seasonal_amplitude = 0.0;
  return p;
}

}  // namespace

TEST_CASE("sampled butterfly communities") {
  double alpha_sum = 0.0;
  std::size_t alpha_n = 0;
  bool nonneg = true;
  for (std::uint64_t s = 0; alpha_n < 10'000; ++s) {
    auto rng = substream(12, s);
    const auto p = sample_butterfly_community(rng);
    CHECK_NOTHROW(validate(p));
    REQUIRE(p.S >= 2);
    REQUIRE(p.S <= 32);
    for (std::size_t i = 0; i < p.S; ++i) {
      REQUIRE(p.r[i] >= 0.15);
      REQUIRE(p.r[i] <= 0.4);
      REQUIRE(p.N0[i] >= std::pow(10.0, 1.7));
      REQUIRE(p.N0[i] <= std::pow(10.0, 2.4));
      REQUIRE(p.competition(i, i) == 0.0);
      for (std::size_t j = 0; j < p.S; ++j) {
        if (i == j) continue;
        nonneg = nonneg && p.competition(i, j) >= 0.0;
        alpha_sum += p.competition(i, j);
        ++alpha_n;
      }
    }
  }
  CHECK(nonneg);
  CHECK(std::abs(alpha_sum / static_cast<double>(alpha_n) - 0.03) < 0.002);
}

TEST_CASE("butterfly parameter validation") {
  auto p = single_species(0.3, 100, 50);
  p.S = 2;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = single_species(0.3, 100, 50);
  p.alpha = {0.1};
  CHECK_THROWS_AS(validate(p), ParameterError);
}

TEST_CASE("single species follows the logistic curve") {
  const auto p = single_species(0.3, 150.0, 60.0);
  RngStream rng(1, 0);
  const auto traj = simulate_butterfly(p, rng, EcoStages::deterministic());
  REQUIRE(traj.latent.years >= 61);
  for (std::size_t y = 0; y < traj.latent.years; ++y) {
    const double exact = oracle::logistic(0.3, 150.0, 60.0, static_cast<double>(y));
    REQUIRE(std::abs(traj.latent.at(0, y) - exact) / exact < 0.005);
  }
  CHECK(std::abs(traj.latent.at(0, 60) - 150.0) / 150.0 < 0.01);
}

TEST_CASE("full butterfly run stays non-negative and finite") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto rng = substream(13, s);
    const auto p = sample_butterfly_community(rng);
    const auto traj = simulate_butterfly(p, rng);
    REQUIRE(traj.environment.size() == static_cast<std::size_t>(p.horizon_years));
    for (double v : traj.latent.values) REQUIRE(v >= 0.0);
    for (double v : traj.observed_log10.values) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("environment multipliers average to one") {
  auto p = single_species(0.3, 100, 50);
  RngStream rng(2, 0);
  const auto e = environment_multipliers(p, rng);
  double m = 0.0;
  for (double x : e) {
    CHECK(x > 0.0);
    m += x;
  }
  CHECK(m / static_cast<double>(e.size()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("negative-binomial observation variance") {
  SpeciesMatrix latent(1, 200'000);
  for (double& v : latent.values) v = 100.0;
  EcoObservation obs;
  obs.log_noise_sd = 0.0;
  RngStream rng(3, 0);
  const auto out = observe_abundance(latent, obs, rng);
  std::vector<double> counts;
  for (double v : out.values) counts.push_back(std::pow(10.0, v));
  const auto [m, var] = oracle::mean_var(counts);
  CHECK(std::abs(m - 100.0) < 0.2);
  CHECK(std::abs(var - 105.0) / 105.0 < 0.03);
}

TEST_CASE("lynx-hare decoupled limits") {
  LynxHareParams p;
  p.beta = 0.0;
  p.delta = 0.0;
  p.H0 = 30.0;
  p.L0 = 20.0;
  RngStream rng(4, 0);
  const auto traj = simulate_lynx_hare(p, rng, EcoStages::deterministic());
  CHECK(std::abs(traj.latent.at(0, 60) - p.K) / p.K < 0.01);
  // L' = -gamma L - rho L^2 keeps L below the pure exponential decay.
  CHECK(traj.latent.at(1, 1) < p.L0 * std::exp(-p.gamma) * 1.05);
  CHECK(traj.latent.at(1, 20) < 1e-6);
}

TEST_CASE("lynx-hare equilibrium is stationary") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto rng = substream(14, s);
    auto p = sample_lynx_hare(rng);
    const auto [H, L] = oracle::lynx_hare_equilibrium(p.r, p.K, p.beta, p.delta, p.gamma, p.rho);
    if (!(H > 0 && L > 0)) continue;
    double dH = 1, dL = 1;
    lynx_hare_rhs(p, H, L, dH, dL);
    CHECK(std::abs(dH) < 1e-9);
    CHECK(std::abs(dL) < 1e-9);
    p.H0 = H;
    p.L0 = L;
    const auto traj = simulate_lynx_hare(p, rng, EcoStages::deterministic());
    for (std::size_t y = 0; y < traj.latent.years; ++y) {
      REQUIRE(std::abs(traj.latent.at(0, y) - H) / H < 0.01);
      REQUIRE(std::abs(traj.latent.at(1, y) - L) / L < 0.01);
    }
  }
}

TEST_CASE("lynx-hare clamps to plausible maxima") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = substream(15, s);
    auto p = sample_lynx_hare(rng);
    p.r = 3.0;
    p.K = 1000.0;
    EcoStages stages;
    stages.observation = false;
    const auto traj = simulate_lynx_hare(p, rng, stages);
    for (std::size_t y = 0; y < traj.latent.years; ++y) {
      REQUIRE(traj.latent.at(0, y) <= 200.0);
      REQUIRE(traj.latent.at(1, y) <= 80.0);
      REQUIRE(traj.latent.at(1, y) >= 0.0);
    }
  }
}
