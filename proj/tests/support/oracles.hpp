#pragma once

// Independent reference computations used by the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "forge/cascade.hpp"
#include "forge/epi.hpp"

namespace oracle {

// Mean-field SEAIR ODE with the same compartment flows as the stochastic
// simulator (no super-spreading noise, no importation), integrated by RK4 with
// `steps_per_day` steps. Transmission is held constant within each day at
// beta(t) * s(t). Returns daily new infections, seeds included on day 0.
std::vector<double> seair_ode_incidence(const forge::EpiParams& p, int steps_per_day = 100);

// Spectral radius of F V^-1 built from the compartment structure.
double ngm_spectral_radius(const forge::EpiParams& p);

// N(t) = K / (1 + (K / N0 - 1) e^{-r t}).
double logistic(double r, double K, double N0, double t);

// Interior fixed point of the logistic-prey / self-limited predator system.
std::pair<double, double> lynx_hare_equilibrium(double r, double K, double beta, double delta, double gamma,
                                                double rho);

// Number of infection orders on a tree that start at `root`, by enumeration.
// Trees up to ~10 nodes only.
std::uint64_t count_spreading_orders(const forge::NetGraph& tree, forge::NodeId root);

// Sample mean and variance.
std::pair<double, double> mean_var(const std::vector<double>& v);

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Bytes of every shard in a corpus directory, in manifest order.
std::string shard_bytes(const std::filesystem::path& dir);

}  // namespace oracle
