#include <doctest.h>

#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "forge/observation.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

std::int64_t sum(const CountSeries& s) { return std::accumulate(s.begin(), s.end(), std::int64_t{0}); }

}  // namespace

TEST_CASE("under-reporting") {
  CountSeries s(100, 1000);
  RngStream rng(1, 0);
  auto spec = ObservationSpec::identity();
  CHECK(apply_underreporting(s, spec, rng) == s);

  spec.report_rate_initial = spec.report_rate_final = 0.0;
  CHECK(sum(apply_underreporting(s, spec, rng)) == 0);

  spec.report_rate_initial = spec.report_rate_final = 0.5;
  CountSeries big(100, 10'000);
  const double reported = static_cast<double>(sum(apply_underreporting(big, spec, rng)));
  CHECK(std::abs(reported - 5e5) < 3 * std::sqrt(1e6 * 0.25));
}

TEST_CASE("thinning expectation follows the logistic ramp") {
  ObservationSpec spec;
  spec.report_rate_initial = 0.1;
  spec.report_rate_final = 0.8;
  spec.logistic_midpoint_frac = 0.5;
  const std::size_t days = 60;
  CHECK(report_probability(spec, 30, days) == doctest::Approx(0.45));
  CHECK(report_probability(spec, 0, days) < report_probability(spec, 59, days));
  CountSeries s(days, 200);
  std::vector<double> acc(days, 0.0);
  const int runs = 2000;
  for (int r = 0; r < runs; ++r) {
    auto rng = substream(2, static_cast<std::uint64_t>(r));
    const auto out = apply_underreporting(s, spec, rng);
    for (std::size_t t = 0; t < days; ++t) acc[t] += static_cast<double>(out[t]);
  }
  for (std::size_t t = 0; t < days; ++t) {
    const double p = report_probability(spec, t, days);
    const double n = 200.0 * runs;
    CHECK(std::abs(acc[t] - n * p) < 4.5 * std::sqrt(n * p * (1 - p)));
  }
}

TEST_CASE("reporting delay") {
  CountSeries s{5, 0, 7, 3, 0, 0, 0, 0};
  RngStream rng(3, 0);
  ObservationSpec spec;
  CHECK(apply_reporting_delay(s, spec, rng) == s);

  spec.delay_mode_days = 3;
  const auto shifted = apply_reporting_delay(s, spec, rng);
  CHECK(shifted == CountSeries{0, 0, 0, 5, 0, 7, 3, 0});

  spec.delay_mode_days = 1;
  spec.delay_success_prob = 0.5;
  CountSeries impulse(80, 0);
  impulse[0] = 100'000;
  const auto out = apply_reporting_delay(impulse, spec, rng);
  CHECK(sum(out) == 100'000);
  CHECK(out[0] == 0);
  // Pool the tail beyond day 12 into one cell.
  double chi2 = 0.0;
  double tail_obs = 0.0, tail_exp = 0.0;
  int cells = 0;
  for (std::size_t d = 1; d < out.size(); ++d) {
    const double expected = 1e5 * 0.5 * std::pow(0.5, static_cast<double>(d - 1));
    if (d <= 12) {
      chi2 += std::pow(static_cast<double>(out[d]) - expected, 2) / expected;
      ++cells;
    } else {
      tail_obs += static_cast<double>(out[d]);
      tail_exp += expected;
    }
  }
  chi2 += std::pow(tail_obs - tail_exp, 2) / tail_exp;
  ++cells;
  const boost::math::chi_squared dist(cells - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("delay conserves mass when the horizon covers the kernel") {
  ObservationSpec spec;
  spec.delay_mode_days = 2;
  spec.delay_success_prob = 0.5;
  const auto pmf = reporting_delay_pmf(spec);
  CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  CountSeries s(30, 50);
  s.resize(30 + pmf.size(), 0);
  RngStream rng(4, 0);
  CHECK(sum(apply_reporting_delay(s, spec, rng)) == sum(s));
  CountSeries short_series(30, 50);
  CHECK(sum(apply_reporting_delay(short_series, spec, rng)) <= sum(short_series));
}

TEST_CASE("weekday effects") {
  CountSeries s{5, 5, 5, 5, 5, 5, 5, 5};
  std::array<double, 7> ones{1, 1, 1, 1, 1, 1, 1};
  CHECK(apply_weekday_effects(s, ones) == s);
  std::array<double, 7> w = ones;
  w[0] = 2.0;
  const auto out = apply_weekday_effects(s, w);
  CHECK(out[0] == 10);
  CHECK(out[7] == 10);
  CHECK(out[1] == 5);
  // Half-to-even rounding.
  w[0] = 0.5;
  CHECK(apply_weekday_effects(CountSeries{5}, w)[0] == 2);
  CHECK(apply_weekday_effects(CountSeries{7}, w)[0] == 4);

  RngStream rng(5, 0);
  std::array<double, 7> drawn{};
  for (double& x : drawn) x = normal(rng, 1.0, 0.05);
  CountSeries big(7000, 10'000);
  const double ratio = static_cast<double>(sum(apply_weekday_effects(big, drawn))) / static_cast<double>(sum(big));
  const double mean_effect = std::accumulate(drawn.begin(), drawn.end(), 0.0) / 7.0;
  CHECK(std::abs(ratio - mean_effect) / mean_effect < 0.01);
}

TEST_CASE("mean-one multiplicative noise") {
  RngStream rng(6, 0);
  CountSeries s(10'000, 10'000);
  CHECK(apply_multiplicative_noise(s, 0.0, rng) == s);
  CHECK(sum(apply_multiplicative_noise(CountSeries(50, 0), 0.3, rng)) == 0);
  const auto noisy = apply_multiplicative_noise(s, 0.2, rng);
  CHECK(std::abs(static_cast<double>(sum(noisy)) / 1e4 - 1e4) / 1e4 < 0.01);
}

TEST_CASE("full observation pipeline") {
  ClinicalCounts truth;
  truth.cases = CountSeries(200, 0);
  truth.hospitalizations = CountSeries(200, 0);
  truth.deaths = CountSeries(200, 0);
  for (std::size_t t = 0; t < 200; ++t) {
    truth.cases[t] = static_cast<std::int64_t>(2000 * std::exp(-std::pow((t - 90.0) / 30.0, 2)));
    truth.hospitalizations[t] = truth.cases[t] / 20;
    truth.deaths[t] = truth.cases[t] / 100;
  }
  RngStream rng(7, 0);
  const auto same = observe(truth, ObservationSpec::identity(), rng);
  CHECK(same.cases == truth.cases);
  CHECK(same.hospitalizations == truth.hospitalizations);
  CHECK(same.deaths == truth.deaths);

  int below = 0;
  bool nonneg = true;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    auto srng = substream(8, r);
    const auto spec = sample_observation_spec(srng);
    REQUIRE(spec.noise_sigma_deaths >= 0.05);
    REQUIRE(spec.noise_sigma_deaths <= 0.10);
    REQUIRE(spec.report_rate_final >= spec.report_rate_initial);
    const auto rep = observe(truth, spec, srng);
    below += sum(rep.cases) <= sum(truth.cases);
    for (const auto* s : {&rep.cases, &rep.hospitalizations, &rep.deaths}) {
      for (auto x : *s) nonneg = nonneg && x >= 0;
    }
  }
  CHECK(nonneg);
  CHECK(below >= 990);
}
