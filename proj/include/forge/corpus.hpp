#pragma once

// Corpus container: length-prefixed binary records in "SGNC" shards plus a
// JSON manifest sidecar.
//
// Shard:  "SGNC" | u16 version | { u32 body_len | body }*
// Body:   u64 id | u8 domain | u32 len + params JSON | u16 n_arrays
//         | per array: u16 len + name | u8 dtype | u8 ndims | u64 dims[ndims]
//                      | u64 payload_bytes | payload (little-endian)

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace forge {

inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";

enum class Domain : std::uint8_t { Epi = 0, EcoButterfly = 1, EcoLynxHare = 2, Chem = 3, Cascade = 4 };

// "epi", "eco_butterfly", "eco_lynxhare", "chem", "cascade".
std::string domain_name(Domain d);
// Accepts the names above and the hyphenated CLI spellings.
Domain parse_domain(std::string_view name);

enum class DType : std::uint8_t { F32 = 0, F64 = 1, I32 = 2, I64 = 3, U8 = 4 };
std::size_t dtype_size(DType t);
std::string dtype_name(DType t);

struct NamedArray {
  std::string name;
  DType dtype = DType::F64;
  std::vector<std::uint64_t> dims;
  std::string payload;  // little-endian bytes

  std::uint64_t element_count() const;
  // Element i widened to double.
  double get(std::size_t i) const;
  std::vector<double> to_f64() const;

  static NamedArray f32(std::string name, std::span<const double> values, std::vector<std::uint64_t> dims = {});
  static NamedArray f64(std::string name, std::span<const double> values, std::vector<std::uint64_t> dims = {});
  static NamedArray i32(std::string name, std::span<const std::int32_t> values,
                        std::vector<std::uint64_t> dims = {});
  static NamedArray i64(std::string name, std::span<const std::int64_t> values,
                        std::vector<std::uint64_t> dims = {});
  static NamedArray u8(std::string name, std::span<const std::uint8_t> values,
                       std::vector<std::uint64_t> dims = {});

  bool operator==(const NamedArray&) const = default;
};

struct CorpusRecord {
  std::uint64_t id = 0;
  Domain domain = Domain::Epi;
  std::string params_json;
  std::vector<NamedArray> arrays;

  const NamedArray* find(std::string_view name) const;
  const NamedArray& at(std::string_view name) const;  // throws FormatError
  bool operator==(const CorpusRecord&) const = default;
};

// Throws ValidationError when a declared shape disagrees with the payload.
void validate_record(const CorpusRecord& r);
std::string encode_record(const CorpusRecord& r);
// `base_offset` locates the body in its file for error messages.
CorpusRecord decode_record(std::string_view body, std::uint64_t base_offset = 0,
                           const std::string& context = {});

// Complete shard image: header followed by each record.
std::string encode_shard(std::span<const CorpusRecord> records);

struct ShardInfo {
  std::string file;
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct CorpusManifest {
  int schema_version = kManifestSchemaVersion;
  Domain domain = Domain::Epi;
  std::uint64_t record_count = 0;
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::string created;  // ISO-8601 UTC
  std::vector<ShardInfo> shards;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();  // domain-level side files

  nlohmann::json to_json() const;
  static CorpusManifest from_json(const nlohmann::json& j);
};

// SHA-256 of the canonical (sorted-key, compact) JSON rendering.
std::string config_digest(const nlohmann::json& config);

CorpusManifest read_manifest(const std::filesystem::path& dir);

// Buffers up to `shard_size` records per shard, writes each shard through a
// temporary file and the manifest last. If finish() is never reached, every
// shard written so far is removed.
class CorpusWriter {
 public:
  CorpusWriter(std::filesystem::path dir, Domain domain, std::size_t shard_size = 1000);
  ~CorpusWriter();
  CorpusWriter(const CorpusWriter&) = delete;
  CorpusWriter& operator=(const CorpusWriter&) = delete;

  void add(const CorpusRecord& record);
  // Fills counts and shards into `manifest` and writes it.
  CorpusManifest finish(CorpusManifest manifest);

 private:
  void flush();
  std::filesystem::path dir_;
  Domain domain_;
  std::size_t shard_size_;
  std::string buffer_;
  std::uint64_t buffered_ = 0;
  std::uint64_t total_ = 0;
  std::vector<ShardInfo> shards_;
  bool finished_ = false;
};

// Streams records from one shard file without loading it whole.
class ShardReader {
 public:
  explicit ShardReader(const std::filesystem::path& path);
  bool next(CorpusRecord& out);
  std::uint64_t records_read() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
  std::uint64_t size_ = 0;
  std::uint64_t count_ = 0;
};

// Streams every shard in manifest order (or `order`, a permutation of shard
// indices) and cross-checks per-shard and total counts against the manifest.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& dir, std::vector<std::size_t> order = {});
  const CorpusManifest& manifest() const { return manifest_; }
  bool next(CorpusRecord& out);

 private:
  std::filesystem::path dir_;
  CorpusManifest manifest_;
  std::vector<std::size_t> order_;
  std::size_t shard_pos_ = 0;
  std::optional<ShardReader> shard_;
  std::uint64_t total_ = 0;
};

std::vector<CorpusRecord> read_all_records(const std::filesystem::path& dir);

std::string utc_timestamp();

}  // namespace forge
