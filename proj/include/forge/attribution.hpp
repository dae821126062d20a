#pragma once

// Embedding database for back-to-simulation attribution: exact cosine top-k
// retrieval and parameter summaries over the retrieved simulations.
//
// File layout (little-endian):
//   "SGED" | u16 version | u32 d | u64 count | count x d f32
//   | u32 len + manifest hash | u64 ids[count] | u64 blob_offsets[count + 1]
//   | concatenated UTF-8 JSON parameter blobs

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace forge {

inline constexpr std::uint16_t kEmbeddingDbVersion = 1;

struct EmbeddingEntry {
  std::uint64_t id = 0;
  std::vector<float> embedding;
  std::string params_json;
};

class EmbeddingDB {
 public:
  std::uint32_t dimension() const { return d_; }
  std::size_t size() const { return ids_.size(); }
  std::uint64_t id(std::size_t row) const { return ids_[row]; }
  std::span<const float> embedding(std::size_t row) const {
    return {matrix_.data() + row * d_, d_};
  }
  const std::string& params_json(std::size_t row) const { return blobs_[row]; }
  const std::string& manifest_hash() const { return manifest_hash_; }
  std::optional<std::size_t> row_of(std::uint64_t id) const;
  const std::vector<float>& matrix() const { return matrix_; }
  double norm(std::size_t row) const { return norms_[row]; }

  void save(const std::filesystem::path& path) const;
  static EmbeddingDB load(const std::filesystem::path& path);

  static EmbeddingDB build(std::vector<EmbeddingEntry> entries, std::string manifest_hash);

 private:
  void index();
  std::uint32_t d_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<float> matrix_;
  std::vector<std::string> blobs_;
  std::vector<double> norms_;
  std::map<std::uint64_t, std::size_t> rows_;
  std::string manifest_hash_;
};

// Rejects duplicate ids, mismatched or zero dimensions and non-finite values
// with ValidationError. Entries keep their input order.
EmbeddingDB build_db(std::vector<EmbeddingEntry> entries, std::string manifest_hash = {});

// Throws ParameterError on length mismatch or a zero vector.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct RetrievalHit {
  std::uint64_t id = 0;
  double score = 0.0;
};

// Exact scan; score descending, id ascending on ties.
std::vector<RetrievalHit> retrieve_topk(const EmbeddingDB& db, std::span<const float> query,
                                        std::size_t k = 50);

struct ParamSummary {
  std::string name;
  std::vector<std::uint64_t> ids;
  std::vector<double> values;       // NaN where missing
  std::vector<std::uint8_t> missing;
  std::map<int, double> quantiles;  // 5, 25, 50, 75, 95 over present values
  double median = 0.0;
  std::size_t present = 0;
};

inline constexpr int kSummaryQuantiles[] = {5, 25, 50, 75, 95};

// Parameter names are dotted JSON paths ("params.N"); array elements are
// addressed by index ("params.beta_waves.0.beta"). A name absent from every
// blob throws ValidationError; one absent from some blobs sets their missing
// flag.
std::vector<ParamSummary> summarize_params(const EmbeddingDB& db, std::span<const std::uint64_t> ids,
                                           const std::vector<std::string>& names);

// Linear-interpolation quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

}  // namespace forge
