#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "forge/binary_io.hpp"
#include "forge/corpus.hpp"
#include "forge/errors.hpp"
#include "forge/stochastics.hpp"
#include "oracles.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

CorpusRecord make_record(std::uint64_t id) {
  RngStream rng(99, id);
  CorpusRecord r;
  r.id = id;
  r.domain = Domain::Epi;
  r.params_json = R"({"id":)" + std::to_string(id) + "}";
  const auto len = static_cast<std::size_t>(uniform_int(rng, 0, 40));
  std::vector<double> f(len);
  for (auto& x : f) x = normal(rng, 0, 1);
  std::vector<std::int32_t> counts(2 * len);
  for (auto& c : counts) c = static_cast<std::int32_t>(poisson(rng, 50));
  std::vector<std::uint8_t> mask(len, 1);
  r.arrays.push_back(NamedArray::f32("rt", f));
  r.arrays.push_back(NamedArray::f64("exact", f));
  r.arrays.push_back(NamedArray::i32("counts", counts, {2, len}));
  r.arrays.push_back(NamedArray::u8("mask", mask));
  return r;
}

CorpusManifest write(const fs::path& dir, std::uint64_t n, std::size_t shard_size) {
  CorpusWriter w(dir, Domain::Epi, shard_size);
  for (std::uint64_t i = 0; i < n; ++i) w.add(make_record(i));
  CorpusManifest m;
  m.domain = Domain::Epi;
  m.master_seed = 99;
  m.config = {{"k", 1}};
  m.config_digest = config_digest(m.config);
  return w.finish(m);
}

}  // namespace

TEST_CASE("named arrays") {
  const std::vector<double> v{1.5, -2.0, 3.25};
  const auto a = NamedArray::f32("x", v);
  CHECK(a.dims == std::vector<std::uint64_t>{3});
  CHECK(a.payload.size() == 12);
  CHECK(a.to_f64() == v);
  const std::vector<std::int64_t> big{-(std::int64_t{1} << 40), 7};
  CHECK(NamedArray::i64("y", big).get(0) == -1099511627776.0);
  CorpusRecord r;
  CHECK_THROWS_AS(NamedArray::f64("z", v, {2, 2}), ValidationError);
  r.arrays.push_back(NamedArray::f64("z", v));
  r.arrays.back().dims = {2, 2};
  CHECK_THROWS_AS(validate_record(r), ValidationError);
  CHECK_THROWS_AS(r.at("missing"), FormatError);
}

TEST_CASE("record encoding round trip") {
  const auto r = make_record(17);
  const auto body = encode_record(r);
  CHECK(decode_record(body) == r);
  CHECK_THROWS_AS(decode_record(std::string_view(body).substr(0, body.size() - 3)), FormatError);
}

TEST_CASE("corpus write and read") {
  oracle::TempDir dir("corpus");
  const auto m = write(dir.path(), 1000, 128);
  CHECK(m.record_count == 1000);
  CHECK(m.shards.size() == 8);
  const auto back = read_all_records(dir.path());
  REQUIRE(back.size() == 1000);
  for (std::uint64_t i = 0; i < 1000; ++i) REQUIRE(back[i] == make_record(i));

  const auto rm = read_manifest(dir.path());
  CHECK(rm.to_json() == m.to_json());
  CHECK(rm.shards[0].sha256 == sha256_file_hex(dir / rm.shards[0].file));

  // Any shard order yields the same record set.
  std::vector<std::size_t> order{7, 3, 0, 6, 1, 5, 2, 4};
  CorpusReader shuffled(dir.path(), order);
  std::vector<std::uint64_t> ids;
  CorpusRecord rec;
  while (shuffled.next(rec)) ids.push_back(rec.id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::uint64_t> expected(1000);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(ids == expected);
  CHECK_THROWS_AS(CorpusReader(dir.path(), {0, 0, 1, 2, 3, 4, 5, 6}), ParameterError);
}

TEST_CASE("one record per shard") {
  oracle::TempDir dir("single");
  const auto m = write(dir.path(), 5, 1);
  CHECK(m.shards.size() == 5);
  for (const auto& s : m.shards) CHECK(s.records == 1);
  CHECK(read_manifest(dir.path()).record_count == 5);
}

TEST_CASE("empty corpus") {
  oracle::TempDir dir("empty");
  const auto m = write(dir.path(), 0, 10);
  CHECK(m.record_count == 0);
  CorpusReader reader(dir.path());
  CorpusRecord r;
  CHECK_FALSE(reader.next(r));
}

TEST_CASE("corrupt shards") {
  oracle::TempDir dir("corrupt");
  const auto m = write(dir.path(), 20, 10);
  const auto shard = dir / m.shards[1].file;

  SUBCASE("bad magic names the shard") {
    std::fstream f(shard, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    try {
      read_all_records(dir.path());
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(m.shards[1].file) != std::string::npos);
    }
  }
  SUBCASE("truncated final record reports a byte offset") {
    fs::resize_file(shard, fs::file_size(shard) - 5);
    try {
      read_all_records(dir.path());
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      const std::string what = e.what();
      CHECK(what.find("truncated") != std::string::npos);
      CHECK(what.find("byte offset") != std::string::npos);
    }
  }
  SUBCASE("record count mismatch") {
    auto j = read_manifest(dir.path()).to_json();
    j["shards"][0]["records"] = 9;
    j["record_count"] = 19;
    atomic_write_file(dir / kManifestFile, j.dump(2));
    CHECK_THROWS_AS(read_all_records(dir.path()), ValidationError);
  }
  SUBCASE("unsupported version") {
    std::fstream f(shard, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v[2] = {9, 0};
    f.write(v, 2);
    f.close();
    CHECK_THROWS_AS(read_all_records(dir.path()), FormatError);
  }
}

TEST_CASE("failed writes leave no shards behind") {
  oracle::TempDir dir("abort");
  {
    CorpusWriter w(dir.path(), Domain::Epi, 2);
    for (std::uint64_t i = 0; i < 5; ++i) w.add(make_record(i));
  }
  CHECK(fs::is_empty(dir.path()));
  CorpusWriter w(dir.path(), Domain::Epi, 2);
  auto bad = make_record(1);
  bad.arrays[0].dims = {99};
  CHECK_THROWS_AS(w.add(bad), ValidationError);
}

TEST_CASE("config digest ignores key order") {
  const auto a = nlohmann::json::parse(R"({"b":1,"a":{"y":2,"x":[1,2]}})");
  const auto b = nlohmann::json::parse(R"({"a":{"x":[1,2],"y":2},"b":1})");
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a).size() == 64);
  CHECK(config_digest(a) != config_digest(nlohmann::json::parse(R"({"b":2,"a":{"y":2,"x":[1,2]}})")));
}

TEST_CASE("domain names") {
  for (auto d : {Domain::Epi, Domain::EcoButterfly, Domain::EcoLynxHare, Domain::Chem, Domain::Cascade}) {
    CHECK(parse_domain(domain_name(d)) == d);
  }
  CHECK(parse_domain("eco-butterfly") == Domain::EcoButterfly);
  CHECK_THROWS_AS(parse_domain("weather"), ParameterError);
}
