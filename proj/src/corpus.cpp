#include "forge/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <set>

#include "forge/binary_io.hpp"
#include "forge/errors.hpp"

namespace forge {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'N', 'C'};
constexpr std::size_t kShardHeader = 6;

std::string shard_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shard-%05zu.sgnc", index);
  return buf;
}

template <class T, class Put>
NamedArray make_array(std::string name, DType t, std::span<const T> values, std::vector<std::uint64_t> dims,
                      Put put) {
  NamedArray a;
  a.name = std::move(name);
  a.dtype = t;
  a.dims = dims.empty() ? std::vector<std::uint64_t>{values.size()} : std::move(dims);
  ByteWriter w;
  w.reserve(values.size() * dtype_size(t));
  for (const T& v : values) put(w, v);
  a.payload = w.take();
  validate_record(CorpusRecord{0, Domain::Epi, {}, {a}});
  return a;
}

}  // namespace

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::Epi: return "epi";
    case Domain::EcoButterfly: return "eco_butterfly";
    case Domain::EcoLynxHare: return "eco_lynxhare";
    case Domain::Chem: return "chem";
    case Domain::Cascade: return "cascade";
  }
  throw FormatError("unknown domain tag " + std::to_string(static_cast<int>(d)));
}

Domain parse_domain(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (Domain d : {Domain::Epi, Domain::EcoButterfly, Domain::EcoLynxHare, Domain::Chem, Domain::Cascade}) {
    if (domain_name(d) == n) return d;
  }
  throw ParameterError("unknown domain '" + std::string(name) + "'");
}

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::I32: return 4;
    case DType::I64: return 8;
    case DType::U8: return 1;
  }
  throw FormatError("unknown dtype " + std::to_string(static_cast<int>(t)));
}

std::string dtype_name(DType t) {
  switch (t) {
    case DType::F32: return "f32";
    case DType::F64: return "f64";
    case DType::I32: return "i32";
    case DType::I64: return "i64";
    case DType::U8: return "u8";
  }
  throw FormatError("unknown dtype " + std::to_string(static_cast<int>(t)));
}

std::uint64_t NamedArray::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

double NamedArray::get(std::size_t i) const {
  const std::size_t w = dtype_size(dtype);
  ByteReader r(std::string_view(payload).substr(i * w, w), 0, "array " + name);
  switch (dtype) {
    case DType::F32: return r.f32();
    case DType::F64: return r.f64();
    case DType::I32: return r.i32();
    case DType::I64: return static_cast<double>(r.i64());
    case DType::U8: return r.u8();
  }
  return 0.0;
}

std::vector<double> NamedArray::to_f64() const {
  std::vector<double> out(element_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get(i);
  return out;
}

NamedArray NamedArray::f32(std::string name, std::span<const double> v, std::vector<std::uint64_t> dims) {
  return make_array(std::move(name), DType::F32, v, std::move(dims),
                    [](ByteWriter& w, double x) { w.f32(static_cast<float>(x)); });
}
NamedArray NamedArray::f64(std::string name, std::span<const double> v, std::vector<std::uint64_t> dims) {
  return make_array(std::move(name), DType::F64, v, std::move(dims), [](ByteWriter& w, double x) { w.f64(x); });
}
NamedArray NamedArray::i32(std::string name, std::span<const std::int32_t> v, std::vector<std::uint64_t> dims) {
  return make_array(std::move(name), DType::I32, v, std::move(dims),
                    [](ByteWriter& w, std::int32_t x) { w.i32(x); });
}
NamedArray NamedArray::i64(std::string name, std::span<const std::int64_t> v, std::vector<std::uint64_t> dims) {
  return make_array(std::move(name), DType::I64, v, std::move(dims),
                    [](ByteWriter& w, std::int64_t x) { w.i64(x); });
}
NamedArray NamedArray::u8(std::string name, std::span<const std::uint8_t> v, std::vector<std::uint64_t> dims) {
  return make_array(std::move(name), DType::U8, v, std::move(dims),
                    [](ByteWriter& w, std::uint8_t x) { w.u8(x); });
}

const NamedArray* CorpusRecord::find(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const NamedArray& CorpusRecord::at(std::string_view name) const {
  if (const auto* a = find(name)) return *a;
  throw FormatError("record " + std::to_string(id) + " has no array '" + std::string(name) + "'");
}

void validate_record(const CorpusRecord& r) {
  std::set<std::string> names;
  for (const auto& a : r.arrays) {
    if (a.name.empty() || a.name.size() > 0xFFFF) throw ValidationError("array name length out of range");
    if (!names.insert(a.name).second) {
      throw ValidationError("record " + std::to_string(r.id) + ": duplicate array '" + a.name + "'");
    }
    if (a.dims.size() > 255) throw ValidationError("array '" + a.name + "' has too many dimensions");
    if (a.element_count() * dtype_size(a.dtype) != a.payload.size()) {
      throw ValidationError("record " + std::to_string(r.id) + ": array '" + a.name +
                            "' payload does not match its declared shape");
    }
  }
  if (r.arrays.size() > 0xFFFF) throw ValidationError("too many arrays in record");
  if (r.params_json.size() > 0xFFFFFFFFull) throw ValidationError("parameter blob too large");
}

std::string encode_record(const CorpusRecord& r) {
  validate_record(r);
  ByteWriter w;
  w.u64(r.id);
  w.u8(static_cast<std::uint8_t>(r.domain));
  w.u32(static_cast<std::uint32_t>(r.params_json.size()));
  w.bytes(r.params_json);
  w.u16(static_cast<std::uint16_t>(r.arrays.size()));
  for (const auto& a : r.arrays) {
    w.u16(static_cast<std::uint16_t>(a.name.size()));
    w.bytes(a.name);
    w.u8(static_cast<std::uint8_t>(a.dtype));
    w.u8(static_cast<std::uint8_t>(a.dims.size()));
    for (auto d : a.dims) w.u64(d);
    w.u64(a.payload.size());
    w.bytes(a.payload);
  }
  return w.take();
}

CorpusRecord decode_record(std::string_view body, std::uint64_t base_offset, const std::string& context) {
  ByteReader r(body, base_offset, context.empty() ? "record" : context);
  CorpusRecord rec;
  rec.id = r.u64();
  const auto dom = r.u8();
  if (dom > static_cast<std::uint8_t>(Domain::Cascade)) {
    throw FormatError("unknown domain tag " + std::to_string(dom) + " at byte offset " +
                      std::to_string(r.offset() - 1));
  }
  rec.domain = static_cast<Domain>(dom);
  rec.params_json = std::string(r.bytes(r.u32()));
  const auto n = r.u16();
  rec.arrays.resize(n);
  for (auto& a : rec.arrays) {
    a.name = std::string(r.bytes(r.u16()));
    const auto dt = r.u8();
    if (dt > static_cast<std::uint8_t>(DType::U8)) {
      throw FormatError("unknown dtype " + std::to_string(dt) + " in array '" + a.name + "'");
    }
    a.dtype = static_cast<DType>(dt);
    a.dims.resize(r.u8());
    for (auto& d : a.dims) d = r.u64();
    a.payload = std::string(r.bytes(r.u64()));
  }
  if (r.remaining() != 0) {
    throw FormatError("record " + std::to_string(rec.id) + " has " + std::to_string(r.remaining()) +
                      " trailing bytes at byte offset " + std::to_string(r.offset()));
  }
  try {
    validate_record(rec);
  } catch (const ValidationError& e) {
    throw FormatError(e.what());
  }
  return rec;
}

// --- manifest ---------------------------------------------------------------

std::string config_digest(const nlohmann::json& config) { return sha256_hex(config.dump()); }

nlohmann::json CorpusManifest::to_json() const {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["domain"] = domain_name(domain);
  j["record_count"] = record_count;
  j["master_seed"] = master_seed;
  j["config_digest"] = config_digest;
  j["created"] = created;
  j["shards"] = nlohmann::json::array();
  for (const auto& s : shards) {
    j["shards"].push_back({{"file", s.file}, {"records", s.records}, {"bytes", s.bytes}, {"sha256", s.sha256}});
  }
  j["config"] = config;
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

CorpusManifest CorpusManifest::from_json(const nlohmann::json& j) {
  try {
    CorpusManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw FormatError("unsupported manifest schema_version " + std::to_string(m.schema_version));
    }
    m.domain = parse_domain(j.at("domain").get<std::string>());
    m.record_count = j.at("record_count").get<std::uint64_t>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.created = j.value("created", "");
    for (const auto& s : j.at("shards")) {
      m.shards.push_back({s.at("file").get<std::string>(), s.at("records").get<std::uint64_t>(),
                          s.at("bytes").get<std::uint64_t>(), s.at("sha256").get<std::string>()});
    }
    m.config = j.value("config", nlohmann::json::object());
    m.extra = j.value("extra", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

CorpusManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  CorpusManifest m = CorpusManifest::from_json(j);
  std::uint64_t sum = 0;
  for (const auto& s : m.shards) sum += s.records;
  if (sum != m.record_count) {
    throw ValidationError("manifest record_count " + std::to_string(m.record_count) +
                          " differs from the shard total " + std::to_string(sum));
  }
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- writer -----------------------------------------------------------------

std::string encode_shard(std::span<const CorpusRecord> records) {
  std::string out(kMagic, 4);
  ByteWriter w;
  w.u16(kShardVersion);
  for (const auto& r : records) {
    const std::string body = encode_record(r);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.bytes(body);
  }
  return out + w.take();
}

CorpusWriter::CorpusWriter(std::filesystem::path dir, Domain domain, std::size_t shard_size)
    : dir_(std::move(dir)), domain_(domain), shard_size_(shard_size) {
  if (shard_size_ == 0) throw ParameterError("shard size must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
}

CorpusWriter::~CorpusWriter() {
  if (finished_) return;
  std::error_code ec;
  for (const auto& s : shards_) std::filesystem::remove(dir_ / s.file, ec);
}

void CorpusWriter::add(const CorpusRecord& record) {
  if (finished_) throw std::logic_error("CorpusWriter: add after finish");
  if (record.domain != domain_) {
    throw ValidationError("record " + std::to_string(record.id) + " has domain " + domain_name(record.domain) +
                          ", corpus is " + domain_name(domain_));
  }
  const std::string body = encode_record(record);
  if (body.size() > 0xFFFFFFFFull) throw ValidationError("record too large");
  if (buffered_ == 0) {
    buffer_.assign(kMagic, 4);
    ByteWriter h;
    h.u16(kShardVersion);
    buffer_ += h.data();
  }
  ByteWriter len;
  len.u32(static_cast<std::uint32_t>(body.size()));
  buffer_ += len.data();
  buffer_ += body;
  ++buffered_;
  ++total_;
  if (buffered_ >= shard_size_) flush();
}

void CorpusWriter::flush() {
  if (buffered_ == 0) return;
  ShardInfo info;
  info.file = shard_name(shards_.size());
  info.records = buffered_;
  info.bytes = buffer_.size();
  info.sha256 = sha256_hex(buffer_);
  shards_.push_back(info);  // registered first so a failed write is cleaned up
  atomic_write_file(dir_ / info.file, buffer_);
  buffer_.clear();
  buffered_ = 0;
}

CorpusManifest CorpusWriter::finish(CorpusManifest manifest) {
  flush();
  manifest.domain = domain_;
  manifest.record_count = total_;
  manifest.shards = shards_;
  if (manifest.created.empty()) manifest.created = utc_timestamp();
  if (manifest.config_digest.empty()) manifest.config_digest = config_digest(manifest.config);
  atomic_write_file(dir_ / kManifestFile, manifest.to_json().dump(2) + "\n");
  finished_ = true;
  return manifest;
}

// --- readers ----------------------------------------------------------------

ShardReader::ShardReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open shard " + path.string());
  std::error_code ec;
  size_ = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat shard " + path.string());
  char header[kShardHeader];
  in_.read(header, kShardHeader);
  if (static_cast<std::size_t>(in_.gcount()) < 4 || std::string_view(header, 4) != std::string_view(kMagic, 4)) {
    throw FormatError("bad magic in shard " + path.string());
  }
  if (in_.gcount() < static_cast<std::streamsize>(kShardHeader)) {
    throw FormatError("truncated header in shard " + path.string());
  }
  ByteReader r(std::string_view(header + 4, 2));
  const auto version = r.u16();
  if (version != kShardVersion) {
    throw FormatError("unsupported shard version " + std::to_string(version) + " in " + path.string());
  }
  offset_ = kShardHeader;
}

bool ShardReader::next(CorpusRecord& out) {
  if (offset_ == size_) return false;
  const std::string ctx = "shard " + path_.filename().string();
  if (size_ - offset_ < 4) {
    throw FormatError("truncated record length in " + ctx + " at byte offset " + std::to_string(offset_));
  }
  char lenbuf[4];
  in_.read(lenbuf, 4);
  const auto len = ByteReader(std::string_view(lenbuf, 4)).u32();
  if (size_ - offset_ - 4 < len) {
    throw FormatError("truncated record in " + ctx + " at byte offset " + std::to_string(offset_) + ": declared " +
                      std::to_string(len) + " bytes, " + std::to_string(size_ - offset_ - 4) + " present");
  }
  std::string body(len, '\0');
  in_.read(body.data(), len);
  if (!in_) throw IoError("read failed in " + ctx);
  out = decode_record(body, offset_ + 4, ctx);
  offset_ += 4 + len;
  ++count_;
  return true;
}

CorpusReader::CorpusReader(const std::filesystem::path& dir, std::vector<std::size_t> order)
    : dir_(dir), manifest_(read_manifest(dir)), order_(std::move(order)) {
  if (order_.empty()) {
    order_.resize(manifest_.shards.size());
    std::iota(order_.begin(), order_.end(), 0);
  }
  std::vector<std::size_t> check = order_;
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < check.size(); ++i) {
    if (check[i] != i || check.size() != manifest_.shards.size()) {
      throw ParameterError("shard order must be a permutation of the manifest shards");
    }
  }
}

bool CorpusReader::next(CorpusRecord& out) {
  while (true) {
    if (!shard_) {
      if (shard_pos_ == order_.size()) {
        if (total_ != manifest_.record_count) {
          throw ValidationError("corpus holds " + std::to_string(total_) + " records, manifest declares " +
                                std::to_string(manifest_.record_count));
        }
        return false;
      }
      shard_.emplace(dir_ / manifest_.shards[order_[shard_pos_]].file);
    }
    if (shard_->next(out)) {
      ++total_;
      if (out.domain != manifest_.domain) {
        throw ValidationError("record " + std::to_string(out.id) + " has domain " + domain_name(out.domain) +
                              ", manifest declares " + domain_name(manifest_.domain));
      }
      return true;
    }
    const auto& info = manifest_.shards[order_[shard_pos_]];
    if (shard_->records_read() != info.records) {
      throw ValidationError("shard " + info.file + " holds " + std::to_string(shard_->records_read()) +
                            " records, manifest declares " + std::to_string(info.records));
    }
    shard_.reset();
    ++shard_pos_;
  }
}

std::vector<CorpusRecord> read_all_records(const std::filesystem::path& dir) {
  CorpusReader reader(dir);
  std::vector<CorpusRecord> out;
  CorpusRecord r;
  while (reader.next(r)) out.push_back(std::move(r));
  return out;
}

}  // namespace forge
