#include <doctest.h>

#include <cmath>
#include <numeric>

#include "forge/epi.hpp"
#include "forge/metrics.hpp"
#include "forge/stochastics.hpp"

using namespace forge;

TEST_CASE("naive forecast") {
  const std::vector<double> h{1, 4, 7};
  CHECK(naive_forecast(h, 4) == std::vector<double>{7, 7, 7, 7});
  CHECK(naive_forecast(std::vector<double>{0}, 3) == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(naive_forecast(std::vector<double>{}, 2), MetricError);
}

TEST_CASE("forecasting skill") {
  CHECK(forecasting_skill(6.5, 10.0) == doctest::Approx(35.0));
  CHECK(forecasting_skill(10.0, 10.0) == 0.0);
  CHECK(forecasting_skill(21.2, 10.0) == doctest::Approx(-112.0));
  CHECK_THROWS_AS(forecasting_skill(1.0, 0.0), MetricError);
  const std::vector<double> truth{3, 5, 2}, pred{4, 5, 0};
  CHECK(mae(pred, truth) == doctest::Approx(1.0));
}

TEST_CASE("pinball loss") {
  const std::vector<double> levels{0.1, 0.5, 0.9};
  const std::vector<double> y{1, 2, 3};
  CHECK(pinball_loss(levels, {y, y, y}, y) == 0.0);
  const std::vector<double> median{0.5};
  CHECK(pinball_loss(median, {{4.0}}, std::vector<double>{2.0}) == doctest::Approx(1.0));
  CHECK(pinball_loss(median, {{0.0}}, std::vector<double>{2.0}) == doctest::Approx(1.0));

  RngStream rng(1, 0);
  std::vector<std::vector<double>> q(3, std::vector<double>(50));
  std::vector<double> truth(50);
  for (auto& t : truth) t = normal(rng, 0, 1);
  for (auto& row : q)
    for (auto& v : row) v = normal(rng, 0, 1);
  double direct = 0.0;
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t t = 0; t < 50; ++t) {
      const double u = truth[t] - q[l][t];
      direct += u >= 0 ? levels[l] * u : (levels[l] - 1.0) * u;
    }
  }
  CHECK(std::abs(pinball_loss(levels, q, truth) - direct / 150.0) < 1e-12);
  CHECK_THROWS_AS(pinball_loss(levels, {y, y}, y), MetricError);
  CHECK_THROWS_AS(pinball_loss(levels, {y, y, {1.0}}, y), MetricError);
}

TEST_CASE("reproduction number error metrics") {
  const std::vector<double> t{2.0, 3.0};
  const auto perfect = r0_error_metrics(t, t);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.mpe == 0.0);
  const auto one = r0_error_metrics(std::vector<double>{3.0}, std::vector<double>{2.0});
  CHECK(one.mse == doctest::Approx(1.0));
  CHECK(one.mpe == doctest::Approx(50.0));

  RngStream rng(2, 0);
  std::vector<double> est(100), truth(100);
  for (std::size_t i = 0; i < 100; ++i) {
    truth[i] = uniform(rng, 1, 4);
    est[i] = truth[i] + normal(rng, 0, 0.5);
  }
  double mse = 0, mpe = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    mse += (est[i] - truth[i]) * (est[i] - truth[i]);
    mpe += std::abs(est[i] - truth[i]) / truth[i];
  }
  const auto m = r0_error_metrics(est, truth);
  CHECK(std::abs(m.mse - mse / 100) < 1e-12);
  CHECK(std::abs(m.mpe - 100 * mpe / 100) < 1e-12);
  CHECK_THROWS_AS(r0_error_metrics(std::vector<double>{1.0}, std::vector<double>{0.0}), MetricError);
  CHECK_THROWS_AS(r0_error_metrics(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), MetricError);
}

TEST_CASE("top-k accuracy") {
  const std::vector<std::vector<std::uint32_t>> rankings{{3, 1, 2}, {1, 2, 3}, {2, 3, 1}};
  const std::vector<std::uint32_t> labels{3, 1, 2};
  CHECK(topk_accuracy(rankings, labels, 1) == 1.0);
  const std::vector<std::uint32_t> other{1, 3, 9};
  CHECK(topk_accuracy(rankings, other, 3) == doctest::Approx(2.0 / 3.0));
  CHECK(topk_accuracy(rankings, other, 1) == 0.0);

  RngStream rng(3, 0);
  std::vector<std::vector<std::uint32_t>> random(20'000, std::vector<std::uint32_t>(1000));
  std::vector<std::uint32_t> truth(random.size());
  for (std::size_t i = 0; i < random.size(); ++i) {
    std::iota(random[i].begin(), random[i].end(), 0u);
    std::swap(random[i][0], random[i][static_cast<std::size_t>(uniform_int(rng, 0, 999))]);
    truth[i] = static_cast<std::uint32_t>(uniform_int(rng, 0, 999));
  }
  const double acc = topk_accuracy(random, truth, 1);
  CHECK(std::abs(acc - 0.001) < 4 * std::sqrt(0.001 * 0.999 / 20'000));
  CHECK_THROWS_AS(topk_accuracy(rankings, labels, 0), MetricError);
}

TEST_CASE("exponential growth fit") {
  std::vector<double> c(30);
  for (std::size_t t = 0; t < c.size(); ++t) c[t] = 2.0 * std::exp(0.1 * static_cast<double>(t));
  const auto fit = fit_exp_growth_rate(c);
  CHECK(std::abs(fit.rate - 0.1) < 1e-9);
  CHECK(std::abs(fit.intercept - std::log(2.0)) < 1e-9);

  CHECK(std::abs(fit_exp_growth_rate(std::vector<double>(10, 5.0)).rate) < 1e-12);
  CHECK_THROWS_AS(fit_exp_growth_rate(std::vector<double>{1, 0, 2, 0, 3, 4}), InsufficientDataError);

  const auto with_zeros = fit_exp_growth_rate(std::vector<double>{0, 1, std::exp(0.2), 0, std::exp(0.6), std::exp(0.8), std::exp(1.0)});
  CHECK(with_zeros.zeros_dropped == 2);
  CHECK(with_zeros.rate == doctest::Approx(0.2));

  int within = 0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    auto rng = substream(4, trial);
    std::vector<double> noisy(kGrowthWindowDays);
    for (std::size_t t = 0; t < noisy.size(); ++t) noisy[t] = 50.0 * std::exp(0.15 * static_cast<double>(t) + normal(rng, 0, 0.1));
    within += std::abs(fit_exp_growth_rate(noisy).rate - 0.15) <= 0.02;
  }
  CHECK(within == 1000);
}

TEST_CASE("reproduction number from growth rate") {
  CHECK(r0_from_growth(0.0, 4.0, 5.0) == 1.0);
  CHECK(r0_from_growth(0.1, 4.0, 5.0) == doctest::Approx(2.1));
  CHECK(r0_from_growth(0.1, std::nullopt, 5.0) == doctest::Approx(1.5));
}

TEST_CASE("growth-based estimate on a mean-field SEIR run") {
  EpiParams p;
  p.has_E = true;
  p.sigma = 1.0 / 4.0;
  p.gamma = 1.0 / 5.0;
  p.beta_waves = {{0, 2.5 * p.gamma}};
  p.N = 50'000'000;
  p.seed_infected = 2000;
  p.horizon_days = 60;
  RngStream rng(5, 0);
  const auto traj = simulate_epidemic(p, rng);
  std::vector<double> window(traj.true_daily.cases.begin() + 20, traj.true_daily.cases.begin() + 20 + kGrowthWindowDays);
  const double r = fit_exp_growth_rate(window).rate;
  const double est = r0_from_growth(r, 4.0, 5.0);
  CHECK(std::abs(est - 2.5) / 2.5 < 0.15);
}

TEST_CASE("pooled skill evaluation") {
  std::vector<TruthPoint> truth;
  for (int d = 0; d < 6; ++d) {
    truth.push_back({"A", "2020-01-0" + std::to_string(d + 1), 10.0 + 2 * d});
    truth.push_back({"B", "2020-01-0" + std::to_string(d + 1), 5.0});
  }
  std::vector<ForecastPoint> fc;
  for (int d = 2; d < 6; ++d) {
    fc.push_back({"A", "2020-01-0" + std::to_string(d + 1), 1, 10.0 + 2 * d});
    fc.push_back({"B", "2020-01-0" + std::to_string(d + 1), 1, 6.0});
  }
  fc.push_back({"C", "2020-01-01", 1, 1.0});
  const auto rep = evaluate_skill(truth, fc);
  CHECK(rep.skipped == 1);
  CHECK(rep.pooled.count == 8);
  // Naive errors: A off by 2 each step, B exact.
  CHECK(rep.pooled.naive_mae == doctest::Approx(1.0));
  CHECK(rep.pooled.model_mae == doctest::Approx(0.5));
  CHECK(rep.pooled.skill == doctest::Approx(50.0));
  CHECK(std::isnan(rep.by_location.at("B").skill));
  CHECK(rep.by_location.at("A").skill == doctest::Approx(100.0));
  CHECK(rep.by_horizon.at(1).count == 8);
}
