#pragma once

// Hybrid Suzuki-Miyaura yield generator: main effects and supported
// interaction residuals fitted from an empirical reaction table, exact
// memorization of observed tuples, a rule-augmented failure model and
// binned heteroscedastic noise, sampled through a stratified protocol and
// z-score calibrated to target moments.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "forge/stochastics.hpp"

namespace forge {

inline constexpr std::size_t kComponents = 5;
enum class Component : std::size_t { ArylHalide = 0, Boronate = 1, Ligand = 2, Base = 3, Solvent = 4 };
inline constexpr std::array<std::string_view, kComponents> kComponentNames{
    "aryl_halide", "boronate", "ligand", "base", "solvent"};

Component component_from_name(std::string_view name);

class VocabularyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReactionTuple {
  std::array<std::string, kComponents> parts;

  const std::string& operator[](Component c) const { return parts[static_cast<std::size_t>(c)]; }
  std::string& operator[](Component c) { return parts[static_cast<std::size_t>(c)]; }
  auto operator<=>(const ReactionTuple&) const = default;
};

using EncodedTuple = std::array<std::uint32_t, kComponents>;

class Vocabulary {
 public:
  // Returns the code, adding the name if new.
  std::uint32_t intern(Component c, const std::string& name);
  // Throws VocabularyError for names outside the vocabulary.
  std::uint32_t code(Component c, const std::string& name) const;
  const std::string& name(Component c, std::uint32_t code) const;
  std::size_t size(Component c) const { return names_[static_cast<std::size_t>(c)].size(); }

  EncodedTuple encode(const ReactionTuple& t) const;
  ReactionTuple decode(const EncodedTuple& t) const;
  bool contains(Component c, const std::string& name) const;

 private:
  std::array<std::vector<std::string>, kComponents> names_;
  std::array<std::map<std::string, std::uint32_t>, kComponents> index_;
};

enum class Stratum : std::uint8_t { Empirical = 0, Memorized = 1, Partial = 2, Uniform = 3 };
std::string_view stratum_name(Stratum s);

struct ChemRow {
  ReactionTuple tuple;
  double yield = 0.0;
  Stratum stratum = Stratum::Empirical;
};

struct ChemDataset {
  std::vector<ChemRow> rows;
};

// Columns aryl_halide, boronate, ligand, base, solvent, yield (any order).
// Rows with an empty or non-numeric yield are dropped.
ChemDataset read_reactions_csv(const std::filesystem::path& path);
void write_reactions_csv(const ChemDataset& data, const std::filesystem::path& path);

// Seeded shuffle; the first `fraction` of rows is the analysis split.
std::pair<ChemDataset, ChemDataset> split_dataset(const ChemDataset& data, double fraction,
                                                  RngStream& rng);

struct EncodedReaction {
  EncodedTuple codes{};
  double yield = 0.0;
};

// --- model pieces -----------------------------------------------------------

struct MainEffects {
  double global_mean = 0.0;
  std::array<std::vector<double>, kComponents> effect;
  std::array<std::vector<std::size_t>, kComponents> count;
};

struct InteractionTable {
  std::vector<Component> components;  // 2 or 3
  std::map<std::vector<std::uint32_t>, double> delta;
  std::map<std::vector<std::uint32_t>, std::size_t> support;

  std::vector<std::uint32_t> key(const EncodedTuple& t) const;
  double lookup(const EncodedTuple& t) const;
};

struct MemorizedStats {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

struct FailureHeuristic {
  std::string name;
  double boost = 0.0;
  // Triggered when every listed component takes one of the listed values.
  std::vector<std::pair<Component, std::set<std::string>>> conditions;
};

struct FailureConfig {
  double threshold = 0.05;  // yields below this count as failures
  double empirical_weight = 0.6;
  double ceiling = 0.95;
  std::vector<FailureHeuristic> heuristics;

  // Strong base + weak ligand, BF3K boronate + weak base, aryl chloride +
  // low-activity ligand, with membership lists for the bundled vocabulary.
  static FailureConfig defaults();
};

struct VarianceBin {
  double lower = 0.0;
  double upper = 1.0;
  double center = 0.5;  // mean prediction of the rows in the bin
  double variance = 0.0;
  std::size_t count = 0;
};

struct ChemFitOptions {
  std::size_t min_support = 3;
  std::vector<std::vector<Component>> pairs{
      {Component::ArylHalide, Component::Ligand},
      {Component::Boronate, Component::Base},
      {Component::Ligand, Component::Base},
      {Component::Base, Component::Solvent}};
  std::vector<std::vector<Component>> threeways{
      {Component::ArylHalide, Component::Ligand, Component::Solvent},
      {Component::Boronate, Component::Base, Component::Solvent}};
  std::size_t variance_bins = 40;
  double analysis_fraction = 0.75;  // effects are fitted on this share
  std::uint64_t split_seed = 0;
  FailureConfig failure = FailureConfig::defaults();
  // Calibration targets; negative means "use the fitted data's moments".
  double target_mean = -1.0;
  double target_std = -1.0;
};

struct ChemYieldModel {
  Vocabulary vocab;
  MainEffects main;
  std::vector<InteractionTable> pairs;
  std::vector<InteractionTable> threeways;
  std::map<EncodedTuple, MemorizedStats> memorized;
  FailureConfig failure;
  std::array<std::vector<double>, kComponents> component_failure_rate;
  // Per heuristic and component: value code -> condition satisfied.
  std::vector<std::array<std::vector<char>, kComponents>> heuristic_masks;
  std::vector<VarianceBin> variance_bins;
  double target_mean = 0.0;
  double target_std = 0.0;
};

std::vector<EncodedReaction> encode_dataset(const ChemDataset& data, Vocabulary& vocab);

// mu_x = mean(yield | x) - mean(yield); throws FitError on empty data.
MainEffects fit_effects(const std::vector<EncodedReaction>& data, const Vocabulary& vocab);

// Residual means after main effects (pairs) and after main + pair terms
// (three-way); combinations seen fewer than min_support times are omitted.
void fit_interactions(const std::vector<EncodedReaction>& data, std::size_t min_support,
                      ChemYieldModel& model, const ChemFitOptions& options);

// mu + sum main + sum pair + sum three-way, clipped to [0, 1]; ignores
// memorization.
double structured_prediction(const EncodedTuple& t, const ChemYieldModel& m);

// Stored empirical mean for memorized tuples, structured prediction otherwise.
double predict_base_yield(const EncodedTuple& t, const ChemYieldModel& m);
double predict_base_yield(const ReactionTuple& t, const ChemYieldModel& m);

void fit_failure_model(const std::vector<EncodedReaction>& data, ChemYieldModel& m);
double failure_probability(const EncodedTuple& t, const ChemYieldModel& m);
double failure_probability(const ReactionTuple& t, const ChemYieldModel& m);

// Equal-count bins over the structured prediction of the non-failure rows.
std::vector<VarianceBin> fit_variance_bins(const std::vector<EncodedReaction>& data,
                                           const ChemYieldModel& m, std::size_t bins = 40);
double noise_variance(double predicted, const ChemYieldModel& m);

// Full pipeline on an empirical dataset.
ChemYieldModel fit_chem_model(const ChemDataset& data, const ChemFitOptions& options = {});

// Failure w.p. p_fail -> U(0.001, 0.04); otherwise N(y_hat, var(y_hat));
// clipped to [0.001, 0.999]. Uncalibrated.
double sample_reaction_yield(const EncodedTuple& t, const ChemYieldModel& m, RngStream& rng);

struct ChemStrata {
  double memorized = 0.60;
  double partial = 0.30;
  double uniform = 0.10;
  double high_yield_quantile = 0.75;
};

struct ChemCorpus {
  ChemDataset data;                    // calibrated, clipped yields
  std::vector<EncodedTuple> codes;
  std::vector<double> raw;             // before calibration
  std::vector<double> calibrated;      // after z-score, before clipping
};

// Row i draws from rng.child(i), so rows can be produced in any order.
ChemCorpus generate_chem_corpus(const ChemYieldModel& m, std::size_t n, const RngStream& rng,
                                const ChemStrata& strata = {});

// z-score map onto (target_mean, target_std) using the sample moments.
std::vector<double> calibrate(const std::vector<double>& raw, double target_mean, double target_std);

// Synthetic full-factorial stand-in for the empirical 5,760-reaction table
// (5 aryl halides x 3 boronates x 12 ligands x 8 bases x 4 solvents). Fitted
// with the stand-in targets below, a stratified corpus lands near 9% failures.
ChemDataset generate_standin_reactions(std::uint64_t seed);
inline constexpr double kStandinTargetMean = 0.62;
inline constexpr double kStandinTargetStd = 0.28;

}  // namespace forge
