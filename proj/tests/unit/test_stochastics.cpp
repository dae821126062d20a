#include <doctest.h>

#include <cmath>
#include <vector>

#include "forge/errors.hpp"
#include "forge/stochastics.hpp"
#include "oracles.hpp"

using namespace forge;

TEST_CASE("degenerate and boolean draws") {
  RngStream rng(1, 0);
  CHECK(sample(dist::Uniform{2, 2}, rng) == 2.0);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample(dist::Bernoulli{0}, rng) == 0.0);
    CHECK(sample(dist::Bernoulli{1}, rng) == 1.0);
  }
}

TEST_CASE("log-uniform draws are uniform in log10") {
  RngStream rng(7, 3);
  const double lo = 5e4, hi = 5e7;
  double acc = 0.0;
  const int n = 1'000'000;
  bool inside = true;
  for (int i = 0; i < n; ++i) {
    const double x = sample(dist::LogUniform{lo, hi}, rng);
    inside = inside && x >= lo && x <= hi;
    acc += std::log10(x);
  }
  CHECK(inside);
  CHECK(std::abs(acc / n - 0.5 * (std::log10(lo) + std::log10(hi))) < 0.01);
}

TEST_CASE("substreams are reproducible and distinct") {
  RngStream a(42, 0), b(42, 0), c(42, 1);
  int differ = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differ += x != z;
  }
  CHECK(differ == 1000);

  RngStream k1 = substream(9, 5).child(3), k2 = substream(9, 5).child(3), k3 = substream(9, 5).child(4);
  CHECK(k1() == k2());
  CHECK(k1() != k3());
  CHECK(substream(9, 5).stream_id() == 5);
}

TEST_CASE("draw order across streams does not matter") {
  std::vector<double> forward(1000), reverse(1000);
  for (std::uint64_t id = 0; id < 1000; ++id) {
    auto rng = substream(11, id);
    forward[id] = normal(rng, 0, 1) + poisson(rng, 3.0);
  }
  for (std::uint64_t id = 1000; id-- > 0;) {
    auto rng = substream(11, id);
    reverse[id] = normal(rng, 0, 1) + poisson(rng, 3.0);
  }
  CHECK(forward == reverse);
}

TEST_CASE("invalid distribution parameters are rejected") {
  CHECK_THROWS_AS(validate(dist::Uniform{3, 2}), ParameterError);
  CHECK_THROWS_AS(validate(dist::LogUniform{0, 2}), ParameterError);
  CHECK_THROWS_AS(validate(dist::Normal{0, -1}), ParameterError);
  CHECK_THROWS_AS(validate(dist::Gamma{0, 1}), ParameterError);
  CHECK_THROWS_AS(validate(dist::Bernoulli{1.5}), ParameterError);
  CHECK_THROWS_AS(validate(dist::Binomial{-1, 0.5}), ParameterError);
  CHECK_THROWS_AS(validate(dist::NegBinomial{10, 0}), ParameterError);
  RngStream rng(1, 1);
  CHECK_THROWS_AS(sample(dist::Poisson{-1}, rng), ParameterError);
  CHECK_NOTHROW(validate(dist::GeometricShifted{2, 0.5}));
}

TEST_CASE("negative binomial variance") {
  RngStream rng(3, 0);
  for (double mu : {100.0, 5000.0}) {
    std::vector<double> v(1'000'000);
    for (auto& x : v) x = static_cast<double>(neg_binomial(rng, mu, 2000.0));
    const auto [m, var] = oracle::mean_var(v);
    CHECK(std::abs(m - mu) / mu < 0.005);
    const double expected = mu + mu * mu / 2000.0;
    CHECK(std::abs(var - expected) / expected < 0.05);
  }
}

TEST_CASE("moment checks for common samplers") {
  RngStream rng(5, 2);
  const int n = 200'000;
  std::vector<double> g(n), ln(n), tn(n), geo(n), bin(n);
  for (int i = 0; i < n; ++i) {
    g[i] = gamma(rng, 4.0, 1.75);
    ln[i] = lognormal(rng, -0.02, 0.2);
    tn[i] = trunc_normal_nonneg(rng, 0.03, 0.01);
    geo[i] = static_cast<double>(geometric_shifted(rng, 1, 0.5));
    bin[i] = static_cast<double>(binomial(rng, 1000, 0.3));
  }
  CHECK(oracle::mean_var(g).first == doctest::Approx(7.0).epsilon(0.01));
  CHECK(oracle::mean_var(ln).first == doctest::Approx(1.0).epsilon(0.005));
  CHECK(oracle::mean_var(geo).first == doctest::Approx(2.0).epsilon(0.01));
  CHECK(oracle::mean_var(bin).first == doctest::Approx(300.0).epsilon(0.005));
  CHECK(oracle::mean_var(bin).second == doctest::Approx(210.0).epsilon(0.03));
  double lo = 1.0;
  for (double x : tn) lo = std::min(lo, x);
  CHECK(lo >= 0.0);
}

TEST_CASE("multinomial split conserves the total when probabilities sum to one") {
  RngStream rng(8, 0);
  const std::vector<double> probs{0.2, 0.5, 0.3};
  std::vector<std::int64_t> out(3, 0);
  multinomial_add(rng, 100'000, probs, out);
  CHECK(out[0] + out[1] + out[2] == 100'000);
  CHECK(std::abs(out[1] - 50'000) < 1000);
}

TEST_CASE("event probability from a constant hazard") {
  CHECK(event_probability(0.0) == 0.0);
  CHECK(event_probability(0.5, 2.0) == doctest::Approx(1.0 - std::exp(-1.0)));
}
