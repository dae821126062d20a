#pragma once

// Ecological generators: multispecies butterfly communities (logistic growth,
// weak competition, AR(1) environment, seasonal capacity) and stochastic
// Rosenzweig-MacArthur predator-prey cycles, both observed through the same
// negative-binomial / log10 / Gaussian pipeline.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/stochastics.hpp"

namespace forge {

// Species x years, row-major.
struct SpeciesMatrix {
  std::size_t species = 0;
  std::size_t years = 0;
  std::vector<double> values;

  SpeciesMatrix() = default;
  SpeciesMatrix(std::size_t s, std::size_t y) : species(s), years(y), values(s * y, 0.0) {}
  double& at(std::size_t s, std::size_t y) { return values[s * years + y]; }
  double at(std::size_t s, std::size_t y) const { return values[s * years + y]; }
};

struct ButterflyParams {
  std::size_t S = 2;
  std::vector<double> r;
  std::vector<double> N0;
  std::vector<double> K;
  std::vector<double> alpha;  // S x S row-major, diagonal 0
  double seasonal_amplitude = 0.15;
  double phase = 0.0;
  double env_initial_mean = 1.0;
  double env_initial_sd = 0.05;
  double env_rho = 0.7;
  double env_sd = 0.05;
  int horizon_years = 100;

  double competition(std::size_t i, std::size_t j) const { return alpha[i * S + j]; }
};

struct LynxHareParams {
  double r = 0.5;
  double K = 100.0;
  double beta = 0.03;
  double delta = 0.03;
  double gamma = 1.5;
  double rho = 0.001;
  double H0 = 50.0;
  double L0 = 10.0;
  double H_max = 200.0;
  double L_max = 80.0;
  int horizon_years = 100;
  double pelt_scale = 1.0;
};

// Which stochastic stages run. All off gives a deterministic trajectory.
struct EcoStages {
  bool environment = true;
  bool seasonal = true;
  bool process_noise = true;
  bool observation = true;

  static EcoStages deterministic() { return {false, false, false, false}; }
};

struct EcoObservation {
  double overdispersion = 2000.0;
  double log_noise_sd = 0.08;
};

struct EcoTrajectory {
  SpeciesMatrix latent;
  SpeciesMatrix observed_log10;
  std::vector<double> environment;  // per-year carrying-capacity multiplier
};

class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate(const ButterflyParams& params);
void validate(const LynxHareParams& params);

ButterflyParams sample_butterfly_community(RngStream& rng);
LynxHareParams sample_lynx_hare(RngStream& rng);

// RK4 with `step` (years) between annual outputs; year 0 is N0.
EcoTrajectory simulate_butterfly(const ButterflyParams& params, RngStream& rng,
                                 const EcoStages& stages = {}, const EcoObservation& obs = {},
                                 double step = 0.05);

// Euler with `step` years; demographic noise once per output year.
EcoTrajectory simulate_lynx_hare(const LynxHareParams& params, RngStream& rng,
                                 const EcoStages& stages = {}, const EcoObservation& obs = {},
                                 double step = 0.01);

// Count ~ NB(mean, overdispersion), log10(max(count, 1)) + Normal(0, sd).
SpeciesMatrix observe_abundance(const SpeciesMatrix& latent, const EcoObservation& obs,
                                RngStream& rng);

// Mean-one multiplicative environment: exp(E_t) / mean_t exp(E_t).
std::vector<double> environment_multipliers(const ButterflyParams& params, RngStream& rng);

// Right-hand sides, exposed for oracles and property tests.
void butterfly_rhs(const ButterflyParams& params, double t, double env,
                   bool seasonal, const std::vector<double>& n, std::vector<double>& dn);
void lynx_hare_rhs(const LynxHareParams& params, double H, double L, double& dH, double& dL);

}  // namespace forge
