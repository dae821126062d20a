#include "forge/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/geometric_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "forge/errors.hpp"

namespace forge {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ (b * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
  std::uint64_t s = mix_key(master_seed, stream_id);
  for (auto& word : state_) word = splitmix64(s);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RngStream::result_type RngStream::operator()() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

RngStream RngStream::child(std::uint64_t tag) const {
  return RngStream(mix_key(master_seed_, stream_id_), tag);
}

RngStream substream(std::uint64_t master_seed, std::uint64_t stream_id) {
  return RngStream(master_seed, stream_id);
}

// --- distributions ----------------------------------------------------------

namespace dist {
Gamma Gamma::from_mean_sd(double mean, double sd) {
  require(mean > 0 && sd > 0, "Gamma: mean and sd must be positive");
  const double shape = (mean * mean) / (sd * sd);
  return {shape, mean / shape};
}
Gamma Gamma::from_mean_shape(double mean, double shape) {
  require(mean > 0 && shape > 0, "Gamma: mean and shape must be positive");
  return {shape, mean / shape};
}
}  // namespace dist

double uniform(RngStream& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return lo + (hi - lo) * rng.uniform01();
}

std::int64_t uniform_int(RngStream& rng, std::int64_t lo, std::int64_t hi) {
  boost::random::uniform_int_distribution<std::int64_t> d(lo, hi);
  return d(rng);
}

double log_uniform(RngStream& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::clamp(std::exp(uniform(rng, std::log(lo), std::log(hi))), lo, hi);
}

double normal(RngStream& rng, double mean, double sd) {
  if (sd == 0.0) return mean;
  boost::random::normal_distribution<double> d(mean, sd);
  return d(rng);
}

double trunc_normal_nonneg(RngStream& rng, double mean, double sd) {
  if (sd == 0.0) return std::max(mean, 0.0);
  // Rejection is cheap whenever the mean sits a couple of sd above zero,
  // which is the only regime the simulators use.
  for (int i = 0; i < 1000; ++i) {
    const double x = normal(rng, mean, sd);
    if (x >= 0.0) return x;
  }
  return 0.0;
}

double gamma(RngStream& rng, double shape, double scale) {
  boost::random::gamma_distribution<double> d(shape, scale);
  return d(rng);
}

double lognormal(RngStream& rng, double mu, double sigma) {
  return std::exp(normal(rng, mu, sigma));
}

std::int64_t geometric_shifted(RngStream& rng, std::int64_t shift, double success_prob) {
  if (success_prob >= 1.0) return shift;
  boost::random::geometric_distribution<std::int64_t, double> d(success_prob);
  return shift + d(rng);
}

std::int64_t poisson(RngStream& rng, double rate) {
  if (rate <= 0.0) return 0;
  boost::random::poisson_distribution<std::int64_t, double> d(rate);
  return d(rng);
}

std::int64_t neg_binomial(RngStream& rng, double mean, double overdispersion) {
  if (mean <= 0.0) return 0;
  // Gamma-Poisson mixture.
  const double lambda = gamma(rng, overdispersion, mean / overdispersion);
  return poisson(rng, lambda);
}

std::int64_t binomial(RngStream& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  boost::random::binomial_distribution<std::int64_t, double> d(n, p);
  return d(rng);
}

bool bernoulli(RngStream& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return rng.uniform01() < p;
}

void multinomial_add(RngStream& rng, std::int64_t n, std::span<const double> probs,
                     std::span<std::int64_t> out) {
  double mass_left = 1.0;
  const std::size_t bins = std::min(probs.size(), out.size());
  for (std::size_t i = 0; i < bins && n > 0; ++i) {
    const double p = probs[i];
    if (p <= 0.0) continue;
    const double cond = mass_left > 0.0 ? std::min(1.0, p / mass_left) : 1.0;
    const std::int64_t k = binomial(rng, n, cond);
    out[i] += k;
    n -= k;
    mass_left -= p;
  }
}

double event_probability(double rate, double dt) {
  if (rate <= 0.0) return 0.0;
  return -std::expm1(-rate * dt);
}

void validate(const DistributionSpec& spec) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, dist::Uniform>) {
          require(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo <= d.hi,
                  "Uniform: requires finite lo <= hi");
        } else if constexpr (std::is_same_v<T, dist::LogUniform>) {
          require(d.lo > 0 && d.lo <= d.hi && std::isfinite(d.hi),
                  "LogUniform: requires 0 < lo <= hi");
        } else if constexpr (std::is_same_v<T, dist::Normal> ||
                             std::is_same_v<T, dist::TruncNormalNonneg>) {
          require(std::isfinite(d.mean) && d.sd >= 0, "Normal: requires sd >= 0");
        } else if constexpr (std::is_same_v<T, dist::Gamma>) {
          require(d.shape > 0 && d.scale > 0, "Gamma: requires shape > 0 and scale > 0");
        } else if constexpr (std::is_same_v<T, dist::LogNormal>) {
          require(std::isfinite(d.mu) && d.sigma >= 0, "LogNormal: requires sigma >= 0");
        } else if constexpr (std::is_same_v<T, dist::GeometricShifted>) {
          require(d.shift >= 0 && d.success_prob > 0 && d.success_prob <= 1,
                  "GeometricShifted: requires shift >= 0 and success_prob in (0,1]");
        } else if constexpr (std::is_same_v<T, dist::NegBinomial>) {
          require(d.mean >= 0 && d.overdispersion > 0,
                  "NegBinomial: requires mean >= 0 and overdispersion > 0");
        } else if constexpr (std::is_same_v<T, dist::Binomial>) {
          require(d.n >= 0 && is_prob(d.p), "Binomial: requires n >= 0 and p in [0,1]");
        } else if constexpr (std::is_same_v<T, dist::Poisson>) {
          require(d.rate >= 0 && std::isfinite(d.rate), "Poisson: requires rate >= 0");
        } else if constexpr (std::is_same_v<T, dist::Bernoulli>) {
          require(is_prob(d.p), "Bernoulli: requires p in [0,1]");
        }
      },
      spec);
}

double sample(const DistributionSpec& spec, RngStream& rng) {
  validate(spec);
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, dist::Uniform>) return uniform(rng, d.lo, d.hi);
        else if constexpr (std::is_same_v<T, dist::LogUniform>) return log_uniform(rng, d.lo, d.hi);
        else if constexpr (std::is_same_v<T, dist::Normal>) return normal(rng, d.mean, d.sd);
        else if constexpr (std::is_same_v<T, dist::TruncNormalNonneg>)
          return trunc_normal_nonneg(rng, d.mean, d.sd);
        else if constexpr (std::is_same_v<T, dist::Gamma>) return gamma(rng, d.shape, d.scale);
        else if constexpr (std::is_same_v<T, dist::LogNormal>) return lognormal(rng, d.mu, d.sigma);
        else if constexpr (std::is_same_v<T, dist::GeometricShifted>)
          return static_cast<double>(geometric_shifted(rng, d.shift, d.success_prob));
        else if constexpr (std::is_same_v<T, dist::NegBinomial>)
          return static_cast<double>(neg_binomial(rng, d.mean, d.overdispersion));
        else if constexpr (std::is_same_v<T, dist::Binomial>)
          return static_cast<double>(binomial(rng, d.n, d.p));
        else if constexpr (std::is_same_v<T, dist::Poisson>)
          return static_cast<double>(poisson(rng, d.rate));
        else
          return bernoulli(rng, d.p) ? 1.0 : 0.0;
      },
      spec);
}

std::string describe(const DistributionSpec& spec) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, dist::Uniform>) os << "Uniform(" << d.lo << ", " << d.hi << ")";
        else if constexpr (std::is_same_v<T, dist::LogUniform>) os << "LogUniform(" << d.lo << ", " << d.hi << ")";
        else if constexpr (std::is_same_v<T, dist::Normal>) os << "Normal(" << d.mean << ", " << d.sd << ")";
        else if constexpr (std::is_same_v<T, dist::TruncNormalNonneg>) os << "TruncNormalNonneg(" << d.mean << ", " << d.sd << ")";
        else if constexpr (std::is_same_v<T, dist::Gamma>) os << "Gamma(shape=" << d.shape << ", scale=" << d.scale << ")";
        else if constexpr (std::is_same_v<T, dist::LogNormal>) os << "LogNormal(" << d.mu << ", " << d.sigma << ")";
        else if constexpr (std::is_same_v<T, dist::GeometricShifted>) os << "GeometricShifted(" << d.shift << ", " << d.success_prob << ")";
        else if constexpr (std::is_same_v<T, dist::NegBinomial>) os << "NegBinomial(" << d.mean << ", " << d.overdispersion << ")";
        else if constexpr (std::is_same_v<T, dist::Binomial>) os << "Binomial(" << d.n << ", " << d.p << ")";
        else if constexpr (std::is_same_v<T, dist::Poisson>) os << "Poisson(" << d.rate << ")";
        else os << "Bernoulli(" << d.p << ")";
      },
      spec);
  return os.str();
}

}  // namespace forge
