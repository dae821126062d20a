#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "forge/binary_io.hpp"
#include "forge/config.hpp"
#include "forge/corpus_stats.hpp"
#include "forge/engine.hpp"
#include "forge/errors.hpp"
#include "oracles.hpp"

using namespace forge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

CorpusManifest generate(Domain d, const fs::path& out, std::uint64_t count, std::uint64_t seed, unsigned threads,
                        const json& overrides = json::object()) {
  GenerateRequest req;
  req.domain = d;
  req.config = resolve_config(d, overrides);
  req.count = count;
  req.seed = seed;
  req.out = out;
  req.threads = threads;
  return generate_corpus(req);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SGNN_FORGE_CLI + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::pair<int, std::string> capture_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string("\"") + SGNN_FORGE_CLI + "\" " + args + " >\"" + out.string() + "\" 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, read_file(out)};
}

}  // namespace

TEST_CASE("configuration") {
  const auto def = default_config(Domain::Epi);
  CHECK(def["domain"] == "epi");
  CHECK(resolve_config(Domain::Epi, json::object()) == def);
  CHECK_THROWS_AS(resolve_config(Domain::Epi, json{{"epi", {{"bogus", 1}}}}), ValidationError);
  CHECK_THROWS_AS(resolve_config(Domain::Epi, json{{"epi", {{"observe", "yes"}}}}), ValidationError);
  CHECK_THROWS_AS(resolve_config(Domain::Epi, json{{"domain", "chem"}}), ValidationError);
  CHECK_THROWS_AS(resolve_config(Domain::Epi, json{{"generate", {{"shard_size", 0}}}}), ValidationError);
  const auto coerced = resolve_config(Domain::Cascade, json{{"cascade", {{"p", 1}}}, {"chem", {{"min_support", 9}}}});
  CHECK(coerced["cascade"]["p"].is_number_float());
  CHECK(coerced["cascade"]["p"] == 1.0);

  const auto toml = parse_toml("[epi.features]\nexposed = 0.25\n[generate]\nshard_size = 7\n");
  const auto cfg = resolve_config(Domain::Epi, toml);
  CHECK(epi_features_from_config(cfg["epi"]).exposed == 0.25);
  CHECK(cfg["generate"]["shard_size"] == 7);
  try {
    parse_toml("[epi\nexposed = 1\n", "bad.toml");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad.toml") != std::string::npos);
  }

  const auto chem = resolve_config(Domain::Chem, json::object());
  const auto opts = chem_options_from_config(chem["chem"]);
  CHECK(opts.failure.heuristics.size() == FailureConfig::defaults().heuristics.size());
  CHECK(chem_strata_from_config(chem["chem"]).memorized == 0.6);

  oracle::TempDir dir("cfg");
  {
    std::ofstream out(dir / "c.toml");
    out << "[cascade]\nnodes = 200\nm = 3\n";
  }
  CHECK(load_config(Domain::Cascade, dir / "c.toml")["cascade"]["nodes"] == 200);
  CHECK(load_config(Domain::Cascade, {}) == default_config(Domain::Cascade));
}

TEST_CASE("generation is independent of worker count and record order") {
  const std::map<Domain, json> overrides{
      {Domain::Epi, json::object()},
      {Domain::EcoButterfly, json{{"eco_butterfly", {{"horizon_years", 30}}}}},
      {Domain::EcoLynxHare, json{{"eco_lynxhare", {{"horizon_years", 30}}}}},
      {Domain::Chem, json{{"generate", {{"shard_size", 37}}}}},
      {Domain::Cascade, json{{"cascade", {{"nodes", 150}, {"m", 3}, {"lappe_k", 4}}}}},
  };
  for (const auto& [d, o] : overrides) {
    CAPTURE(domain_name(d));
    oracle::TempDir a("det-a"), b("det-b");
    generate(d, a.path(), 60, 12, 1, o);
    generate(d, b.path(), 60, 12, 3, o);
    CHECK(oracle::shard_bytes(a.path()) == oracle::shard_bytes(b.path()));
    const auto report = validate_corpus(a.path());
    CHECK(report.ok());
    CHECK(report.records == 60);

    const auto factory = make_factory(d, resolve_config(d, o), 12, 60);
    const auto records = read_all_records(a.path());
    for (std::uint64_t id : {59u, 0u, 31u}) CHECK(factory->make(id) == records[id]);
  }
}

TEST_CASE("epi records") {
  oracle::TempDir dir("epi");
  generate(Domain::Epi, dir.path(), 20, 3, 2);
  for (const auto& r : read_all_records(dir.path())) {
    const auto blob = json::parse(r.params_json);
    const auto L = static_cast<std::uint64_t>(blob["params"]["horizon_days"].get<std::int64_t>());
    CHECK(r.at("true_cases").dims == std::vector<std::uint64_t>{L});
    CHECK(r.at("reported_cases").dims == std::vector<std::uint64_t>{L});
    CHECK(r.at("latent_seair").dims == std::vector<std::uint64_t>{5, L});
    CHECK(blob["r0"].get<double>() > 0.0);
  }
  oracle::TempDir params("epi-params");
  generate(Domain::Epi, params.path(), 20, 3, 2, json{{"generate", {{"params_only", true}}}});
  const auto po = read_all_records(params.path());
  CHECK(po[0].arrays.empty());
  CHECK(json::parse(po[0].params_json)["params"] == json::parse(read_all_records(dir.path())[0].params_json)["params"]);
}

TEST_CASE("validation catches tampering") {
  oracle::TempDir dir("tamper");
  generate(Domain::Cascade, dir.path(), 10, 4, 1, json{{"cascade", {{"nodes", 80}, {"m", 2}, {"lappe_k", 3}}}});
  REQUIRE(validate_corpus(dir.path()).ok());

  SUBCASE("config drift") {
    auto j = read_manifest(dir.path()).to_json();
    j["config"]["cascade"]["p"] = 0.5;
    atomic_write_file(dir / kManifestFile, j.dump(2));
    const auto rep = validate_corpus(dir.path());
    CHECK_FALSE(rep.ok());
    CHECK(rep.to_json().dump().find("digest") != std::string::npos);
  }
  SUBCASE("side file edited") {
    std::ofstream(dir / kGraphEdgesFile, std::ios::app) << "0 79\n";
    CHECK_FALSE(validate_corpus(dir.path()).ok());
  }
  SUBCASE("shard bytes flipped") {
    const auto shard = dir / read_manifest(dir.path()).shards[0].file;
    std::fstream f(shard, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
    f.close();
    CHECK_FALSE(validate_corpus(dir.path()).ok());
  }
  SUBCASE("missing directory") { CHECK_FALSE(validate_corpus(dir / "nope").ok()); }
}

TEST_CASE("corpus statistics") {
  oracle::TempDir dir("stats");
  generate(Domain::Epi, dir.path(), 200, 5, 2, json{{"generate", {{"params_only", true}}}});
  const auto rep = corpus_stats(dir.path());
  CHECK(rep["record_count"] == 200);
  CHECK(rep["checks"]["supports"]["violations"] == 0);
  CHECK(rep.contains("parameters"));

  oracle::TempDir empty("stats-empty");
  generate(Domain::Chem, empty.path(), 0, 5, 1);
  const auto e = corpus_stats(empty.path());
  CHECK(e["record_count"] == 0);

  oracle::TempDir chem("stats-chem");
  generate(Domain::Chem, chem.path(), 3000, 6, 2);
  const auto c = corpus_stats(chem.path());
  CHECK(c["checks"]["chem"]["mean"].get<double>() == doctest::Approx(0.62).epsilon(0.02));
}

TEST_CASE("CSV export") {
  oracle::TempDir dir("export"), out("export-out");
  generate(Domain::Epi, dir.path(), 5, 8, 1);
  const auto records = read_all_records(dir.path());
  export_csv(dir.path(), out.path());
  const auto rows = read_csv(out / "epi.csv");
  std::size_t expected = 0;
  for (const auto& r : records) expected += 3 * r.at("true_cases").element_count();
  CHECK(rows.size() == expected + 1);
  CHECK(rows[0] == std::vector<std::string>{"record_id", "day", "series_name", "true_value", "reported_value"});
  for (std::size_t i = 1; i < rows.size(); i += 97) {
    const auto& r = records[std::stoull(rows[i][0])];
    const auto day = std::stoull(rows[i][1]);
    CHECK(std::stod(rows[i][3]) == r.at("true_" + rows[i][2]).get(day));
    CHECK(std::stod(rows[i][4]) == r.at("reported_" + rows[i][2]).get(day));
  }

  export_csv(dir.path(), out.path(), {.weekly = true});
  const auto weekly = read_csv(out / "epi.csv");
  CHECK(weekly[0][1] == "week");
  const auto& first = records[0].at("true_cases");
  double week1 = 0;
  for (std::size_t d = 7; d < 14; ++d) week1 += first.get(d);
  bool found = false;
  for (const auto& row : weekly) {
    if (row[0] == "0" && row[1] == "1" && row[2] == "cases") {
      CHECK(std::stod(row[3]) == week1);
      found = true;
    }
  }
  CHECK(found);

  oracle::TempDir eco("export-eco"), eco_out("export-eco-out");
  generate(Domain::EcoLynxHare, eco.path(), 3, 2, 1);
  export_csv(eco.path(), eco_out.path());
  const auto erows = read_csv(eco_out / "eco_lynxhare.csv");
  const auto erecs = read_all_records(eco.path());
  for (std::size_t i = 1; i < erows.size(); i += 13) {
    const auto& lat = erecs[std::stoull(erows[i][0])].at("latent");
    const auto& obs = erecs[std::stoull(erows[i][0])].at("observed_log10");
    const auto idx = std::stoull(erows[i][1]) * lat.dims[1] + std::stoull(erows[i][2]);
    CHECK(std::stod(erows[i][3]) == lat.get(idx));
    CHECK(static_cast<float>(std::stod(erows[i][4])) == static_cast<float>(obs.get(idx)));
  }

  oracle::TempDir cas("export-cas"), cas_out("export-cas-out");
  generate(Domain::Cascade, cas.path(), 4, 2, 1, json{{"cascade", {{"nodes", 60}, {"m", 2}, {"lappe_k", 2}}}});
  const auto files = export_csv(cas.path(), cas_out.path());
  CHECK(files.size() == 2);
  CHECK(read_csv(cas_out / "cascade.csv").size() == 4 * 60 + 1);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3u) == 3);
  CHECK(resolve_threads(std::nullopt) >= 1);
}

TEST_CASE("command-line exit codes") {
  oracle::TempDir dir("cli");
  const auto corpus = (dir / "c").string();
  CHECK(run_cli("") == 2);
  CHECK(run_cli("generate weather --count 3 --seed 1 --out " + corpus) == 2);
  CHECK(run_cli("generate epi --count 3 --seed 1 --out " + corpus) == 0);
  CHECK(run_cli("validate " + corpus) == 0);
  CHECK(run_cli("stats " + corpus) == 0);
  CHECK(run_cli("export-csv " + corpus + " --out " + (dir / "csv").string()) == 0);
  CHECK(fs::exists(dir / "csv" / "epi.csv"));
  CHECK(run_cli("generate epi --config " + (dir / "missing.toml").string() + " --count 3 --seed 1 --out " +
                (dir / "d").string()) == 3);
  {
    std::ofstream bad(dir / "bad.toml");
    bad << "[epi]\nnonsense = 3\n";
  }
  CHECK(run_cli("generate epi --config " + (dir / "bad.toml").string() + " --count 3 --seed 1 --out " +
                (dir / "e").string()) != 0);

  auto j = read_manifest(corpus).to_json();
  j["config"]["epi"]["substeps_per_day"] = 4;
  atomic_write_file(fs::path(corpus) / kManifestFile, j.dump(2));
  CHECK(run_cli("validate " + corpus) == 1);

  {
    std::ofstream truth(dir / "truth.csv");
    truth << "location,date,value\nA,2020-01-01,1\nA,2020-01-02,2\nA,2020-01-03,4\n";
    std::ofstream fc(dir / "fc.csv");
    fc << "location,date,horizon,value\nA,2020-01-02,1,2\nA,2020-01-03,1,3\n";
  }
  CHECK(run_cli("eval-skill --truth " + (dir / "truth.csv").string() + " --forecast " + (dir / "fc.csv").string()) == 0);
  CHECK(run_cli("eval-skill --truth " + (dir / "nope.csv").string() + " --forecast " + (dir / "fc.csv").string()) == 3);
}

TEST_CASE("command-line analysis tools") {
  oracle::TempDir dir("cli-tools");
  const auto corpus = (dir / "cas").string();
  REQUIRE(run_cli("generate cascade --config " + (dir / "c.toml").string() + " --count 3 --seed 2 --out " + corpus) == 3);
  {
    std::ofstream cfg(dir / "c.toml");
    cfg << "[cascade]\nnodes = 100\nm = 2\nlappe_k = 2\np = 0.3\n";
  }
  REQUIRE(run_cli("generate cascade --config " + (dir / "c.toml").string() + " --count 3 --seed 2 --out " + corpus) == 0);
  REQUIRE(run_cli("export-csv " + corpus + " --out " + (dir / "csv").string()) == 0);
  const auto [rc, text] = capture_cli("rumor-center --graph " + (dir / "csv" / kGraphEdgesFile).string() + " --cascade " +
                                          (dir / "csv" / "cascade.csv").string() + " --record 1 --top 5",
                                      dir / "rumor.json");
  CHECK(rc == 0);
  const auto j = json::parse(text);
  CHECK(j["ranking"].size() == 5);
  CHECK(j["ranking"][0]["rank"] == 1);

  {
    std::ofstream cases(dir / "cases.csv");
    cases << "day,cases\n";
    for (int t = 0; t < 30; ++t) cases << t << ',' << 3.0 * std::exp(0.1 * t) << '\n';
  }
  const auto [rc2, r0] = capture_cli("estimate-r0 --method expgrowth --input " + (dir / "cases.csv").string() +
                                         " --latent 4 --infectious 5",
                                     dir / "r0.json");
  CHECK(rc2 == 0);
  CHECK(json::parse(r0)["r0"].get<double>() == doctest::Approx(2.1).epsilon(1e-6));
  CHECK(run_cli("estimate-r0 --method serial --input " + (dir / "cases.csv").string() + " --infectious 5") == 2);

  {
    std::ofstream emb(dir / "emb.csv");
    emb << "id,v1,v2,v3\n0,1,0,0\n1,0,1,0\n2,0.9,0.1,0\n";
    std::ofstream(dir / "q.txt") << "1,0,0\n";
  }
  REQUIRE(run_cli("build-db --embeddings " + (dir / "emb.csv").string() + " --corpus " + corpus + " --out " +
                  (dir / "db.sged").string()) == 0);
  const auto [rc3, hits] = capture_cli("attribute --db " + (dir / "db.sged").string() + " --query " + (dir / "q.txt").string() + " --k 2 --params p",
                                       dir / "hits.json");
  CHECK(rc3 == 0);
  const auto h = json::parse(hits);
  CHECK(h["hits"][0]["id"] == 0);
  CHECK(h["hits"][1]["id"] == 2);
  CHECK(h["parameters"]["p"]["present"] == 2);
  CHECK(run_cli("attribute --db " + (dir / "db.sged").string() + " --query " + (dir / "q.txt").string() + " --k 9") == 2);
}
