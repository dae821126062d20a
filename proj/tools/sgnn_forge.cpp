// sgnn-forge: corpus generation, auditing and baseline evaluation.
//
// Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 I/O error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/attribution.hpp"
#include "forge/binary_io.hpp"
#include "forge/cascade.hpp"
#include "forge/chem.hpp"
#include "forge/config.hpp"
#include "forge/corpus.hpp"
#include "forge/corpus_stats.hpp"
#include "forge/engine.hpp"
#include "forge/errors.hpp"
#include "forge/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kValidation = 1, kUsage = 2, kIo = 3 };

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Header-indexed CSV table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
  std::size_t require(const std::string& name, const fs::path& file) const {
    if (auto c = column(name)) return *c;
    throw forge::ValidationError(file.string() + ": missing column '" + name + "'");
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

Table read_table(const fs::path& path) {
  std::istringstream in(forge::read_file(path));
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw forge::ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                   std::to_string(t.header.size()) + " fields");
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw forge::ValidationError(path.string() + ": empty CSV");
  return t;
}

double to_number(const std::string& s, const fs::path& file) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw forge::ValidationError(file.string() + ": '" + s + "' is not a number");
}

std::vector<float> read_vector(const fs::path& path) {
  std::string text = forge::read_file(path);
  for (char& c : text) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(text);
  std::vector<float> v;
  std::string tok;
  while (in >> tok) v.push_back(static_cast<float>(to_number(tok, path)));
  if (v.empty()) throw forge::ValidationError(path.string() + ": no values");
  return v;
}

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    forge::atomic_write_file(out, text);
  }
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) out.push_back(name);
  }
  return out;
}

// --- subcommands -------------------------------------------------------------

struct GenerateArgs {
  std::string domain, config, out;
  std::uint64_t count = 0, seed = 0;
  std::optional<unsigned> threads;
  bool params_only = false;
};

int run_generate(const GenerateArgs& a) {
  const forge::Domain domain = forge::parse_domain(a.domain);
  json cfg = forge::load_config(domain, a.config);
  if (a.params_only) cfg["generate"]["params_only"] = true;
  forge::GenerateRequest req;
  req.domain = domain;
  req.config = cfg;
  req.count = a.count;
  req.seed = a.seed;
  req.out = a.out;
  req.threads = forge::resolve_threads(a.threads);
  const auto m = forge::generate_corpus(req);
  std::cerr << "wrote " << m.record_count << " " << forge::domain_name(domain) << " records in "
            << m.shards.size() << " shard(s) to " << a.out << "\n";
  return kOk;
}

int run_validate(const std::string& dir) {
  const auto rep = forge::validate_corpus(dir);
  emit(rep.to_json(), "");
  return rep.ok() ? kOk : kValidation;
}

int run_build_db(const std::string& corpus, const std::string& embeddings, const std::string& out) {
  std::map<std::uint64_t, std::string> blobs;
  std::string manifest_hash;
  if (!corpus.empty()) {
    forge::CorpusReader reader(corpus);
    forge::CorpusRecord rec;
    while (reader.next(rec)) blobs[rec.id] = rec.params_json;
    manifest_hash = forge::sha256_file_hex(fs::path(corpus) / forge::kManifestFile);
  }
  std::istringstream in(forge::read_file(embeddings));
  std::vector<forge::EmbeddingEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (entries.empty() && !fields.empty() && fields[0] == "id") continue;
    forge::EmbeddingEntry e;
    e.id = static_cast<std::uint64_t>(to_number(fields.at(0), embeddings));
    for (std::size_t i = 1; i < fields.size(); ++i) e.embedding.push_back(static_cast<float>(to_number(fields[i], embeddings)));
    if (!blobs.empty()) {
      const auto it = blobs.find(e.id);
      if (it == blobs.end()) throw forge::ValidationError("embedding id " + std::to_string(e.id) + " not in corpus");
      e.params_json = it->second;
    } else {
      e.params_json = "{}";
    }
    entries.push_back(std::move(e));
  }
  const auto db = forge::build_db(std::move(entries), manifest_hash);
  db.save(out);
  std::cerr << "wrote " << db.size() << " embeddings (d=" << db.dimension() << ") to " << out << "\n";
  return kOk;
}

int run_attribute(const std::string& db_path, const std::string& query, std::size_t k, const std::string& params,
                  const std::string& out) {
  const auto db = forge::EmbeddingDB::load(db_path);
  const auto q = read_vector(query);
  const auto hits = forge::retrieve_topk(db, q, k);
  json report;
  report["k"] = k;
  report["manifest_hash"] = db.manifest_hash();
  json jh = json::array();
  std::vector<std::uint64_t> ids;
  for (const auto& h : hits) {
    jh.push_back({{"id", h.id}, {"score", h.score}});
    ids.push_back(h.id);
  }
  report["hits"] = jh;
  const auto names = split_names(params);
  if (!names.empty()) {
    json summaries = json::object();
    for (const auto& s : forge::summarize_params(db, ids, names)) {
      json values = json::array();
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        values.push_back(s.missing[i] ? json(nullptr) : json(s.values[i]));
      }
      json q = json::object();
      for (const auto& [p, v] : s.quantiles) q[std::to_string(p)] = v;
      summaries[s.name] = {{"values", values}, {"present", s.present}, {"median", s.median}, {"quantiles", q}};
    }
    report["parameters"] = summaries;
  }
  emit(report, out);
  return kOk;
}

json breakdown_json(const forge::SkillBreakdown& b) {
  return {{"model_mae", b.model_mae}, {"naive_mae", b.naive_mae},
          {"skill", std::isnan(b.skill) ? json(nullptr) : json(b.skill)}, {"count", b.count}};
}

int run_eval_skill(const std::string& truth_path, const std::string& forecast_path, const std::string& quantile_path,
                   const std::string& out) {
  const Table tt = read_table(truth_path);
  std::vector<forge::TruthPoint> truth;
  {
    const auto l = tt.require("location", truth_path), d = tt.require("date", truth_path),
               v = tt.require("value", truth_path);
    for (const auto& r : tt.rows) truth.push_back({r[l], r[d], to_number(r[v], truth_path)});
  }
  const Table ft = read_table(forecast_path);
  std::vector<forge::ForecastPoint> forecasts;
  {
    const auto l = ft.require("location", forecast_path), d = ft.require("date", forecast_path),
               h = ft.require("horizon", forecast_path), v = ft.require("value", forecast_path);
    for (const auto& r : ft.rows) {
      forecasts.push_back({r[l], r[d], static_cast<int>(to_number(r[h], forecast_path)), to_number(r[v], forecast_path)});
    }
  }
  std::vector<forge::QuantilePoint> quantiles;
  if (!quantile_path.empty()) {
    const Table qt = read_table(quantile_path);
    const auto l = qt.require("location", quantile_path), d = qt.require("date", quantile_path),
               h = qt.require("horizon", quantile_path), q = qt.require("q_level", quantile_path),
               v = qt.require("value", quantile_path);
    for (const auto& r : qt.rows) {
      quantiles.push_back({r[l], r[d], static_cast<int>(to_number(r[h], quantile_path)),
                           to_number(r[q], quantile_path), to_number(r[v], quantile_path)});
    }
  }
  const auto rep = forge::evaluate_skill(truth, forecasts, quantiles);
  json j;
  j["pooled"] = breakdown_json(rep.pooled);
  json loc = json::object();
  for (const auto& [k, b] : rep.by_location) loc[k] = breakdown_json(b);
  json hor = json::object();
  for (const auto& [k, b] : rep.by_horizon) hor[std::to_string(k)] = breakdown_json(b);
  j["by_location"] = loc;
  j["by_horizon"] = hor;
  j["pinball"] = rep.pinball ? json(*rep.pinball) : json(nullptr);
  j["skipped"] = rep.skipped;
  emit(j, out);
  return kOk;
}

int run_estimate_r0(const std::string& method, const std::string& input, std::size_t start, std::size_t window,
                    std::optional<double> latent, double infectious, const std::string& column) {
  if (method != "expgrowth") throw UsageError("unknown method '" + method + "' (expected expgrowth)");
  const Table t = read_table(input);
  const auto c = t.require(column, input);
  std::vector<double> cases;
  for (std::size_t i = start; i < t.rows.size() && cases.size() < window; ++i) {
    cases.push_back(to_number(t.rows[i][c], input));
  }
  const auto fit = forge::fit_exp_growth_rate(cases);
  json j = {{"method", method},
            {"window_start", start},
            {"window_days", cases.size()},
            {"growth_rate", fit.rate},
            {"intercept", fit.intercept},
            {"points_used", fit.points_used},
            {"zeros_dropped", fit.zeros_dropped},
            {"infectious_mean", infectious},
            {"r0", forge::r0_from_growth(fit.rate, latent, infectious)}};
  j["latent_mean"] = latent ? json(*latent) : json(nullptr);
  emit(j, "");
  return kOk;
}

int run_rumor_center(const std::string& graph_path, const std::string& cascade_path, std::size_t top,
                     std::optional<std::uint64_t> record) {
  const auto g = forge::read_edge_list(graph_path);
  const Table t = read_table(cascade_path);
  const auto node = t.require("node", cascade_path);
  const auto time = t.require("infection_time", cascade_path);
  const auto masked = t.column("masked");
  const auto rid = t.column("record_id");
  if (record && !rid) throw forge::ValidationError(cascade_path + ": --record needs a record_id column");
  std::vector<forge::NodeId> infected;
  for (const auto& r : t.rows) {
    if (record && static_cast<std::uint64_t>(to_number(r[*rid], cascade_path)) != *record) continue;
    if (masked && to_number(r[*masked], cascade_path) != 0.0) continue;
    if (to_number(r[time], cascade_path) < 0.0) continue;
    infected.push_back(static_cast<forge::NodeId>(to_number(r[node], cascade_path)));
  }
  const auto ranking = forge::rumor_center(g, infected);
  json ranked = json::array();
  for (std::size_t i = 0; i < ranking.nodes.size() && i < top; ++i) {
    ranked.push_back({{"rank", i + 1}, {"node", ranking.nodes[i]}, {"log_score", ranking.log_scores[i]}});
  }
  emit({{"infected", infected.size()},
        {"used_largest_component", ranking.used_largest_component},
        {"ranking", ranked}},
       "");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgnn-forge: synthetic corpus engine"};
  app.require_subcommand(1);
  int status = kOk;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "generate a corpus");
  g->add_option("domain", gen.domain, "epi | eco-butterfly | eco-lynxhare | chem | cascade")->required();
  g->add_option("--config", gen.config, "TOML configuration");
  g->add_option("--count", gen.count, "number of records")->required();
  g->add_option("--seed", gen.seed, "master seed");
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--threads", gen.threads, "worker threads (default: SGNN_FORGE_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  g->add_flag("--params-only", gen.params_only, "store sampled parameters without simulating");
  g->callback([&] { status = run_generate(gen); });

  std::string dir;
  auto* v = app.add_subcommand("validate", "check corpus integrity");
  v->add_option("dir", dir)->required();
  v->callback([&] { status = run_validate(dir); });

  std::string stats_out;
  auto* st = app.add_subcommand("stats", "summarize a corpus");
  st->add_option("dir", dir)->required();
  st->add_option("--out", stats_out, "write the JSON report here instead of stdout");
  st->callback([&] {
    emit(forge::corpus_stats(dir), stats_out);
    status = kOk;
  });

  std::string csv_out;
  bool weekly = false;
  auto* ex = app.add_subcommand("export-csv", "flatten a corpus to CSV");
  ex->add_option("dir", dir)->required();
  ex->add_option("--out", csv_out)->required();
  ex->add_flag("--weekly", weekly, "epi: sum complete weeks");
  ex->callback([&] {
    for (const auto& p : forge::export_csv(dir, csv_out, {weekly})) std::cerr << "wrote " << p.string() << "\n";
  });

  std::string db_corpus, db_embeddings, db_out;
  auto* bd = app.add_subcommand("build-db", "build an embedding database");
  bd->add_option("--embeddings", db_embeddings, "CSV rows: id,v1,...,vd")->required();
  bd->add_option("--corpus", db_corpus, "corpus supplying parameter blobs");
  bd->add_option("--out", db_out)->required();
  bd->callback([&] { status = run_build_db(db_corpus, db_embeddings, db_out); });

  std::string db_path, query, params, attr_out;
  std::size_t k = 50;
  auto* at = app.add_subcommand("attribute", "retrieve the nearest simulations for a query embedding");
  at->add_option("--db", db_path)->required();
  at->add_option("--query", query, "file holding whitespace- or comma-separated floats")->required();
  at->add_option("--k", k)->check(CLI::PositiveNumber);
  at->add_option("--params", params, "comma-separated parameter paths to summarize");
  at->add_option("--out", attr_out);
  at->callback([&] { status = run_attribute(db_path, query, k, params, attr_out); });

  std::string truth, forecast, quantile_csv, skill_out;
  auto* es = app.add_subcommand("eval-skill", "forecasting skill against the naive baseline");
  es->add_option("--truth", truth, "CSV: location,date,value")->required();
  es->add_option("--forecast", forecast, "CSV: location,date,horizon,value")->required();
  es->add_option("--quantiles", quantile_csv, "CSV: location,date,horizon,q_level,value");
  es->add_option("--out", skill_out);
  es->callback([&] { status = run_eval_skill(truth, forecast, quantile_csv, skill_out); });

  std::string method = "expgrowth", input, column = "cases";
  std::size_t start = 0, window = forge::kGrowthWindowDays;
  std::optional<double> latent;
  double infectious = 0.0;
  auto* er = app.add_subcommand("estimate-r0", "R0 from early exponential growth");
  er->add_option("--method", method);
  er->add_option("--input", input, "CSV with a daily case column")->required();
  er->add_option("--column", column);
  er->add_option("--start", start, "first row of the fit window");
  er->add_option("--window", window)->check(CLI::PositiveNumber);
  er->add_option("--latent", latent, "mean latent period (days)");
  er->add_option("--infectious", infectious, "mean infectious period (days)")->required();
  er->callback([&] { status = run_estimate_r0(method, input, start, window, latent, infectious, column); });

  std::string graph, cascade;
  std::size_t top = 20;
  std::optional<std::uint64_t> record;
  auto* rc = app.add_subcommand("rumor-center", "rank candidate sources of a cascade");
  rc->add_option("--graph", graph, "edge list")->required();
  rc->add_option("--cascade", cascade, "CSV: node,infection_time[,masked][,record_id]")->required();
  rc->add_option("--top", top);
  rc->add_option("--record", record, "select one record from an exported cascade CSV");
  rc->callback([&] { status = run_rumor_center(graph, cascade, top, record); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const forge::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return status;
}
