#pragma once

// Corpus auditing: integrity validation, parameter/array summaries with
// declared-support checks, and flat CSV export.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/corpus.hpp"

namespace forge {

// Declared support of one parameter. `path` is a dotted path into the record
// blob with "*" standing for any array index.
struct SupportRule {
  std::string path;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool allow_zero = false;  // a disabled feature stores 0
};

std::vector<SupportRule> parameter_supports(Domain domain);

// Numeric and boolean leaves of a JSON document keyed by wildcard path.
void flatten_numeric(const nlohmann::json& j, const std::string& prefix,
                     std::vector<std::pair<std::string, double>>& out);

class StatsAccumulator {
 public:
  StatsAccumulator(Domain domain, nlohmann::json config);
  void add(const CorpusRecord& record);
  nlohmann::json report() const;

 private:
  struct ArrayCensus {
    std::string dtype;
    std::uint64_t records = 0;
    std::vector<std::uint64_t> min_dims, max_dims;
    std::uint64_t elements = 0;
  };
  struct RuleTally {
    std::uint64_t checked = 0;
    std::uint64_t violations = 0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
  };

  Domain domain_;
  nlohmann::json config_;
  std::uint64_t records_ = 0;
  std::map<std::string, std::vector<double>> values_;
  std::map<std::string, ArrayCensus> arrays_;
  std::vector<SupportRule> rules_;
  std::vector<RuleTally> tallies_;
  std::uint64_t wave_count_violations_ = 0;
  std::uint64_t relax_above_trigger_ = 0;
  // chem
  std::vector<double> yields_;
  std::map<std::string, std::uint64_t> strata_;
  // cascade
  std::uint64_t source_masked_ = 0;
  double infected_total_ = 0.0;
  double masked_total_ = 0.0;
};

// Summary of every record plus domain checks; an empty corpus gives a report
// with zero records and empty sections.
nlohmann::json corpus_stats(const std::filesystem::path& dir);

struct ValidationReport {
  std::uint64_t records = 0;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
  nlohmann::json to_json() const;
};

// Manifest digest and shard hashes, unique ids, array shapes, side files and
// re-validation of every parameter blob against its domain's invariants.
// Problems are collected rather than thrown.
ValidationReport validate_corpus(const std::filesystem::path& dir);

struct ExportOptions {
  bool weekly = false;  // epi: sum complete weeks (days 0-6, 7-13, ...)
};

// One <domain>.csv per corpus; returns the files written.
std::vector<std::filesystem::path> export_csv(const std::filesystem::path& corpus_dir,
                                              const std::filesystem::path& out_dir,
                                              const ExportOptions& options = {});

}  // namespace forge
