#pragma once

// Seeded random streams and the sampling distributions used by every
// simulator.
//
// A stream is keyed by (master_seed, stream_id) and needs no shared state, so
// records can be generated in any order or on any number of workers and still
// see identical draws.

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace forge {

// xoshiro256** seeded through splitmix64 from the (master, stream) key.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream for a named purpose inside one record (dynamics, observation,
  // clinical...). Deterministic in (master, stream, tag).
  RngStream child(std::uint64_t tag) const;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
};

RngStream substream(std::uint64_t master_seed, std::uint64_t stream_id);

// --- distribution specs -----------------------------------------------------

namespace dist {
struct Uniform { double lo, hi; };
struct LogUniform { double lo, hi; };
struct Normal { double mean, sd; };
struct TruncNormalNonneg { double mean, sd; };
struct Gamma {
  double shape, scale;
  static Gamma from_mean_sd(double mean, double sd);
  static Gamma from_mean_shape(double mean, double shape);
};
struct LogNormal { double mu, sigma; };
// shift + number of failures before the first success.
struct GeometricShifted { std::int64_t shift; double success_prob; };
// variance = mean + mean^2 / overdispersion
struct NegBinomial { double mean, overdispersion; };
struct Binomial { std::int64_t n; double p; };
struct Poisson { double rate; };
struct Bernoulli { double p; };
}  // namespace dist

using DistributionSpec =
    std::variant<dist::Uniform, dist::LogUniform, dist::Normal, dist::TruncNormalNonneg,
                 dist::Gamma, dist::LogNormal, dist::GeometricShifted, dist::NegBinomial,
                 dist::Binomial, dist::Poisson, dist::Bernoulli>;

// Throws ParameterError when the spec is outside its parameter domain.
void validate(const DistributionSpec& spec);

// Integer-valued kinds return exact integers as double.
double sample(const DistributionSpec& spec, RngStream& rng);

std::string describe(const DistributionSpec& spec);

// --- direct samplers used on hot paths ---------------------------------------
// These skip validation beyond what the algorithm itself needs.

double uniform(RngStream& rng, double lo, double hi);
std::int64_t uniform_int(RngStream& rng, std::int64_t lo, std::int64_t hi);  // inclusive
double log_uniform(RngStream& rng, double lo, double hi);
double normal(RngStream& rng, double mean, double sd);
double trunc_normal_nonneg(RngStream& rng, double mean, double sd);
double gamma(RngStream& rng, double shape, double scale);
double lognormal(RngStream& rng, double mu, double sigma);
std::int64_t geometric_shifted(RngStream& rng, std::int64_t shift, double success_prob);
std::int64_t neg_binomial(RngStream& rng, double mean, double overdispersion);
std::int64_t binomial(RngStream& rng, std::int64_t n, double p);
std::int64_t poisson(RngStream& rng, double rate);
bool bernoulli(RngStream& rng, double p);

// Multinomial split of `n` over `probs` (need not sum to 1; the remainder is
// dropped) by sequential conditional binomials. Adds into `out`.
void multinomial_add(RngStream& rng, std::int64_t n, std::span<const double> probs,
                     std::span<std::int64_t> out);

// Probability that an event with constant hazard `rate` fires within `dt`.
double event_probability(double rate, double dt = 1.0);

}  // namespace forge
