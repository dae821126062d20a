#include "forge/eco.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "forge/errors.hpp"

namespace forge {
namespace {

enum StreamTag : std::uint64_t { kEnvironment = 21, kProcess = 22, kObservation = 23 };

std::string echo(const ButterflyParams& p) {
  std::ostringstream os;
  os << "S=" << p.S << " A_s=" << p.seasonal_amplitude << " phase=" << p.phase;
  for (std::size_t i = 0; i < p.S; ++i) os << " [r=" << p.r[i] << " K=" << p.K[i] << " N0=" << p.N0[i] << "]";
  return os.str();
}

SpeciesMatrix log10_floor_one(const SpeciesMatrix& latent) {
  SpeciesMatrix m(latent.species, latent.years);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = std::log10(std::max(1.0, latent.values[i]));
  return m;
}

}  // namespace

void validate(const ButterflyParams& p) {
  if (p.S < 1 || p.S > 32) throw ParameterError("ButterflyParams: S must be in [1, 32]");
  if (p.r.size() != p.S || p.N0.size() != p.S || p.K.size() != p.S || p.alpha.size() != p.S * p.S) {
    throw ParameterError("ButterflyParams: per-species vectors do not match S");
  }
  for (std::size_t i = 0; i < p.S; ++i) {
    if (!(p.K[i] > 0) || !(p.N0[i] >= 0) || !std::isfinite(p.r[i])) {
      throw ParameterError("ButterflyParams: K must be > 0, N0 >= 0, r finite");
    }
    for (std::size_t j = 0; j < p.S; ++j) {
      const double a = p.competition(i, j);
      if (i == j && a != 0.0) throw ParameterError("ButterflyParams: alpha diagonal must be 0");
      if (a < 0.0) throw ParameterError("ButterflyParams: alpha must be >= 0");
    }
  }
  if (p.horizon_years < 1) throw ParameterError("ButterflyParams: horizon must be >= 1 year");
}

void validate(const LynxHareParams& p) {
  for (double v : {p.r, p.K, p.beta, p.delta, p.gamma, p.rho, p.H0, p.L0, p.H_max, p.L_max}) {
    if (!(v >= 0) || !std::isfinite(v)) throw ParameterError("LynxHareParams: values must be finite and >= 0");
  }
  if (!(p.K > 0)) throw ParameterError("LynxHareParams: K must be > 0");
  if (p.horizon_years < 1) throw ParameterError("LynxHareParams: horizon must be >= 1 year");
  if (!(p.pelt_scale > 0)) throw ParameterError("LynxHareParams: pelt_scale must be > 0");
}

ButterflyParams sample_butterfly_community(RngStream& rng) {
  ButterflyParams p;
  p.S = static_cast<std::size_t>(uniform_int(rng, 2, 32));
  p.r.resize(p.S);
  p.N0.resize(p.S);
  p.K.resize(p.S);
  for (std::size_t i = 0; i < p.S; ++i) {
    p.r[i] = uniform(rng, 0.15, 0.4);
    p.N0[i] = std::pow(10.0, uniform(rng, 1.7, 2.4));
    p.K[i] = p.N0[i] * uniform(rng, 1.5, 2.5);
  }
  p.alpha.assign(p.S * p.S, 0.0);
  for (std::size_t i = 0; i < p.S; ++i) {
    for (std::size_t j = 0; j < p.S; ++j) {
      if (i != j) p.alpha[i * p.S + j] = trunc_normal_nonneg(rng, 0.03, 0.01);
    }
  }
  p.phase = uniform(rng, 0.0, 1.0);
  return p;
}

LynxHareParams sample_lynx_hare(RngStream& rng) {
  LynxHareParams p;
  p.r = uniform(rng, 0.4, 0.6);
  p.K = uniform(rng, 80.0, 120.0);
  p.beta = uniform(rng, 0.02, 0.04);
  p.delta = uniform(rng, 0.025, 0.04);
  p.gamma = uniform(rng, 1.0, 2.0);
  p.rho = uniform(rng, 0.0005, 0.002);
  p.H0 = uniform(rng, 20.0, 80.0);
  p.L0 = uniform(rng, 5.0, 30.0);
  return p;
}

std::vector<double> environment_multipliers(const ButterflyParams& p, RngStream& rng) {
  const auto years = static_cast<std::size_t>(p.horizon_years);
  std::vector<double> e(years);
  double level = normal(rng, p.env_initial_mean, p.env_initial_sd);
  for (std::size_t t = 0; t < years; ++t) {
    if (t > 0) level = p.env_rho * level + normal(rng, 0.0, p.env_sd);
    e[t] = std::exp(level);
  }
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(years);
  for (double& v : e) v /= mean;
  return e;
}

void butterfly_rhs(const ButterflyParams& p, double t, double env, bool seasonal,
                   const std::vector<double>& n, std::vector<double>& dn) {
  const double season =
      seasonal ? 1.0 + p.seasonal_amplitude * std::sin(2.0 * std::numbers::pi * (t + p.phase) / 12.0)
               : 1.0;
  for (std::size_t i = 0; i < p.S; ++i) {
    double crowd = n[i];
    for (std::size_t j = 0; j < p.S; ++j) crowd += p.alpha[i * p.S + j] * n[j];
    const double k = p.K[i] * env * season;
    dn[i] = p.r[i] * n[i] * (1.0 - crowd / k);
  }
}

void lynx_hare_rhs(const LynxHareParams& p, double H, double L, double& dH, double& dL) {
  dH = p.r * H * (1.0 - H / p.K) - p.beta * H * L;
  dL = p.delta * H * L - p.gamma * L - p.rho * L * L;
}

SpeciesMatrix observe_abundance(const SpeciesMatrix& latent, const EcoObservation& obs,
                                RngStream& rng) {
  SpeciesMatrix out(latent.species, latent.years);
  for (std::size_t i = 0; i < latent.values.size(); ++i) {
    const std::int64_t count = neg_binomial(rng, std::max(0.0, latent.values[i]), obs.overdispersion);
    out.values[i] = std::log10(static_cast<double>(std::max<std::int64_t>(count, 1))) +
                    normal(rng, 0.0, obs.log_noise_sd);
  }
  return out;
}

EcoTrajectory simulate_butterfly(const ButterflyParams& p, RngStream& rng, const EcoStages& stages,
                                 const EcoObservation& obs, double step) {
  validate(p);
  if (!(step > 0.0) || step > 1.0) throw ParameterError("butterfly: step must be in (0, 1]");
  RngStream env_rng = rng.child(kEnvironment);
  RngStream proc_rng = rng.child(kProcess);
  RngStream obs_rng = rng.child(kObservation);

  const auto years = static_cast<std::size_t>(p.horizon_years);
  const std::size_t S = p.S;
  EcoTrajectory out;
  out.latent = SpeciesMatrix(S, years);
  out.environment = stages.environment ? environment_multipliers(p, env_rng)
                                       : std::vector<double>(years, 1.0);

  const auto substeps = static_cast<int>(std::lround(1.0 / step));
  const double h = 1.0 / substeps;
  std::vector<double> n(p.N0), k1(S), k2(S), k3(S), k4(S), tmp(S);
  for (std::size_t i = 0; i < S; ++i) out.latent.at(i, 0) = n[i];

  for (std::size_t y = 0; y + 1 < years; ++y) {
    const double env = out.environment[y];
    for (int s = 0; s < substeps; ++s) {
      const double t = static_cast<double>(y) + s * h;
      butterfly_rhs(p, t, env, stages.seasonal, n, k1);
      for (std::size_t i = 0; i < S; ++i) tmp[i] = n[i] + 0.5 * h * k1[i];
      butterfly_rhs(p, t + 0.5 * h, env, stages.seasonal, tmp, k2);
      for (std::size_t i = 0; i < S; ++i) tmp[i] = n[i] + 0.5 * h * k2[i];
      butterfly_rhs(p, t + 0.5 * h, env, stages.seasonal, tmp, k3);
      for (std::size_t i = 0; i < S; ++i) tmp[i] = n[i] + h * k3[i];
      butterfly_rhs(p, t + h, env, stages.seasonal, tmp, k4);
      for (std::size_t i = 0; i < S; ++i) {
        const double next = n[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        if (!std::isfinite(next)) {
          throw IntegrationFailure("butterfly integration produced a non-finite state in year " +
                                   std::to_string(y + 1) + ": " + echo(p));
        }
        n[i] = std::max(0.0, next);
      }
    }
    for (std::size_t i = 0; i < S; ++i) {
      if (stages.process_noise) n[i] = std::max(0.0, n[i] + normal(proc_rng, 0.0, 0.03 * n[i]));
      out.latent.at(i, y + 1) = n[i];
    }
  }

  out.observed_log10 = stages.observation ? observe_abundance(out.latent, obs, obs_rng)
                                           : log10_floor_one(out.latent);
  return out;
}

EcoTrajectory simulate_lynx_hare(const LynxHareParams& p, RngStream& rng, const EcoStages& stages,
                                 const EcoObservation& obs, double step) {
  validate(p);
  if (!(step > 0.0) || step > 1.0) throw ParameterError("lynx-hare: step must be in (0, 1]");
  RngStream proc_rng = rng.child(kProcess);
  RngStream obs_rng = rng.child(kObservation);

  const auto years = static_cast<std::size_t>(p.horizon_years);
  const auto substeps = static_cast<int>(std::lround(1.0 / step));
  const double h = 1.0 / substeps;
  EcoTrajectory out;
  out.latent = SpeciesMatrix(2, years);
  out.environment.assign(years, 1.0);

  double H = std::clamp(p.H0, 0.0, p.H_max);
  double L = std::clamp(p.L0, 0.0, p.L_max);
  out.latent.at(0, 0) = H * p.pelt_scale;
  out.latent.at(1, 0) = L * p.pelt_scale;
  for (std::size_t y = 1; y < years; ++y) {
    for (int s = 0; s < substeps; ++s) {
      double dH = 0.0, dL = 0.0;
      lynx_hare_rhs(p, H, L, dH, dL);
      H = std::clamp(H + h * dH, 0.0, p.H_max);
      L = std::clamp(L + h * dL, 0.0, p.L_max);
    }
    if (stages.process_noise) {
      const double cv_h = H > 0.0 ? std::min(0.1, 200.0 / (1000.0 * H)) : 0.0;
      const double cv_l = L > 0.0 ? std::min(0.1, 100.0 / (1000.0 * L)) : 0.0;
      H = std::clamp(H + normal(proc_rng, 0.0, cv_h * H), 0.0, p.H_max);
      L = std::clamp(L + normal(proc_rng, 0.0, cv_l * L), 0.0, p.L_max);
    }
    out.latent.at(0, y) = H * p.pelt_scale;
    out.latent.at(1, y) = L * p.pelt_scale;
  }

  out.observed_log10 = stages.observation ? observe_abundance(out.latent, obs, obs_rng)
                                           : log10_floor_one(out.latent);
  return out;
}

}  // namespace forge
