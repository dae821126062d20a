#include "forge/attribution.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/binary_io.hpp"
#include "forge/errors.hpp"

namespace forge {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'E', 'D'};

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

const nlohmann::json* resolve(const nlohmann::json& root, const std::string& path) {
  const nlohmann::json* cur = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot_pos = path.find('.', start);
    const std::string part = path.substr(start, dot_pos == std::string::npos ? std::string::npos : dot_pos - start);
    if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) return nullptr;
      const std::size_t i = std::stoul(part);
      if (i >= cur->size()) return nullptr;
      cur = &(*cur)[i];
    } else {
      return nullptr;
    }
    if (dot_pos == std::string::npos) break;
    start = dot_pos + 1;
  }
  return cur;
}

}  // namespace

std::optional<std::size_t> EmbeddingDB::row_of(std::uint64_t id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingDB::index() {
  rows_.clear();
  norms_.assign(ids_.size(), 0.0);
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    if (!rows_.emplace(ids_[r], r).second) {
      throw ValidationError("embedding DB: duplicate id " + std::to_string(ids_[r]));
    }
    const auto e = embedding(r);
    for (float v : e) {
      if (!std::isfinite(v)) throw ValidationError("embedding DB: non-finite value for id " + std::to_string(ids_[r]));
    }
    norms_[r] = std::sqrt(dot(e, e));
  }
}

EmbeddingDB EmbeddingDB::build(std::vector<EmbeddingEntry> entries, std::string manifest_hash) {
  EmbeddingDB db;
  db.manifest_hash_ = std::move(manifest_hash);
  if (entries.empty()) return db;
  db.d_ = static_cast<std::uint32_t>(entries.front().embedding.size());
  if (db.d_ == 0) throw ValidationError("embedding DB: zero-dimensional embeddings");
  db.matrix_.reserve(entries.size() * db.d_);
  for (auto& e : entries) {
    if (e.embedding.size() != db.d_) {
      throw ValidationError("embedding DB: id " + std::to_string(e.id) + " has dimension " +
                            std::to_string(e.embedding.size()) + ", expected " + std::to_string(db.d_));
    }
    db.ids_.push_back(e.id);
    db.matrix_.insert(db.matrix_.end(), e.embedding.begin(), e.embedding.end());
    db.blobs_.push_back(std::move(e.params_json));
  }
  db.index();
  return db;
}

EmbeddingDB build_db(std::vector<EmbeddingEntry> entries, std::string manifest_hash) {
  return EmbeddingDB::build(std::move(entries), std::move(manifest_hash));
}

void EmbeddingDB::save(const std::filesystem::path& path) const {
  ByteWriter w;
  std::size_t blob_bytes = 0;
  for (const auto& b : blobs_) blob_bytes += b.size();
  w.reserve(18 + matrix_.size() * 4 + 4 + manifest_hash_.size() + ids_.size() * 16 + 8 + blob_bytes);
  w.bytes(std::string_view(kMagic, 4));
  w.u16(kEmbeddingDbVersion);
  w.u32(d_);
  w.u64(ids_.size());
  for (float v : matrix_) w.f32(v);
  w.u32(static_cast<std::uint32_t>(manifest_hash_.size()));
  w.bytes(manifest_hash_);
  for (auto id : ids_) w.u64(id);
  std::uint64_t off = 0;
  w.u64(off);
  for (const auto& b : blobs_) {
    off += b.size();
    w.u64(off);
  }
  for (const auto& b : blobs_) w.bytes(b);
  atomic_write_file(path, w.data());
}

EmbeddingDB EmbeddingDB::load(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  ByteReader r(raw, 0, "embedding DB " + path.string());
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw FormatError("bad magic in embedding DB " + path.string());
  const auto version = r.u16();
  if (version != kEmbeddingDbVersion) {
    throw FormatError("unsupported embedding DB version " + std::to_string(version) + " in " + path.string());
  }
  EmbeddingDB db;
  db.d_ = r.u32();
  const auto count = r.u64();
  const std::uint64_t cells = count * db.d_;
  if (db.d_ != 0 && cells / db.d_ != count) throw FormatError("embedding DB size overflow in " + path.string());
  const auto block = r.bytes(cells * 4);
  db.matrix_.resize(cells);
  for (std::uint64_t i = 0; i < cells; ++i) db.matrix_[i] = load_le_f32(block.data() + 4 * i);
  db.manifest_hash_ = std::string(r.bytes(r.u32()));
  db.ids_.resize(count);
  for (auto& id : db.ids_) id = r.u64();
  std::vector<std::uint64_t> offsets(count + 1);
  for (auto& o : offsets) o = r.u64();
  const auto blobs = r.bytes(r.remaining());
  db.blobs_.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (offsets[i] > offsets[i + 1] || offsets[i + 1] > blobs.size()) {
      throw FormatError("embedding DB blob offsets out of range in " + path.string());
    }
    db.blobs_[i] = std::string(blobs.substr(offsets[i], offsets[i + 1] - offsets[i]));
  }
  db.index();
  return db;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ParameterError("cosine_similarity: dimensions differ");
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  if (!(na > 0.0) || !(nb > 0.0)) throw ParameterError("cosine_similarity: undefined for a zero vector");
  return dot(a, b) / (na * nb);
}

std::vector<RetrievalHit> retrieve_topk(const EmbeddingDB& db, std::span<const float> query, std::size_t k) {
  if (query.size() != db.dimension()) {
    throw ParameterError("retrieve_topk: query dimension " + std::to_string(query.size()) +
                         " does not match DB dimension " + std::to_string(db.dimension()));
  }
  if (k > db.size()) {
    throw ParameterError("retrieve_topk: k = " + std::to_string(k) + " exceeds DB size " +
                         std::to_string(db.size()));
  }
  const double qn = std::sqrt(dot(query, query));
  if (!(qn > 0.0)) throw ParameterError("retrieve_topk: zero query vector");
  std::vector<RetrievalHit> hits(db.size());
  for (std::size_t r = 0; r < db.size(); ++r) {
    const double n = db.norm(r);
    hits[r] = {db.id(r), n > 0.0 ? dot(query, db.embedding(r)) / (qn * n) : 0.0};
  }
  auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  hits.resize(k);
  return hits;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<ParamSummary> summarize_params(const EmbeddingDB& db, std::span<const std::uint64_t> ids,
                                           const std::vector<std::string>& names) {
  std::vector<nlohmann::json> blobs;
  blobs.reserve(ids.size());
  for (auto id : ids) {
    const auto row = db.row_of(id);
    if (!row) throw ValidationError("summarize_params: unknown id " + std::to_string(id));
    try {
      blobs.push_back(nlohmann::json::parse(db.params_json(*row)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("summarize_params: parameter blob of id " + std::to_string(id) + " is not JSON");
    }
  }
  std::vector<ParamSummary> out;
  for (const auto& name : names) {
    ParamSummary s;
    s.name = name;
    s.ids.assign(ids.begin(), ids.end());
    std::vector<double> present;
    for (const auto& blob : blobs) {
      const nlohmann::json* v = resolve(blob, name);
      if (v && v->is_number()) {
        s.values.push_back(v->get<double>());
        s.missing.push_back(0);
        present.push_back(s.values.back());
      } else if (v && v->is_boolean()) {
        s.values.push_back(v->get<bool>() ? 1.0 : 0.0);
        s.missing.push_back(0);
        present.push_back(s.values.back());
      } else {
        s.values.push_back(std::numeric_limits<double>::quiet_NaN());
        s.missing.push_back(1);
      }
    }
    if (present.empty() && !blobs.empty()) {
      throw ValidationError("summarize_params: parameter '" + name + "' not present in any retrieved blob");
    }
    s.present = present.size();
    for (int q : kSummaryQuantiles) s.quantiles[q] = quantile(present, q / 100.0);
    s.median = s.quantiles[50];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace forge
