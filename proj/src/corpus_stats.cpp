#include "forge/corpus_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "forge/attribution.hpp"
#include "forge/binary_io.hpp"
#include "forge/cascade.hpp"
#include "forge/chem.hpp"
#include "forge/eco.hpp"
#include "forge/engine.hpp"
#include "forge/epi.hpp"
#include "forge/errors.hpp"
#include "forge/observation.hpp"
#include "forge/params_json.hpp"

namespace forge {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxReportedErrors = 100;

// Epi feature flag -> key in the epi.features config table.
const std::pair<const char*, const char*> kFeatureFlags[] = {
    {"params.has_E", "exposed"},           {"params.has_A", "asymptomatic"},
    {"params.has_npi", "npi"},             {"params.has_demography", "demography"},
    {"params.has_waning", "waning"},       {"params.has_superspreading", "superspreading"}};

json summarize(const std::vector<double>& v) {
  if (v.empty()) return {{"count", 0}};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  json q = json::object();
  for (int p : kSummaryQuantiles) q[std::to_string(p)] = quantile(v, p / 100.0);
  return {{"count", v.size()}, {"min", *lo}, {"max", *hi}, {"mean", sum / static_cast<double>(v.size())},
          {"quantiles", q}};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

std::vector<SupportRule> parameter_supports(Domain domain) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (domain) {
    case Domain::Epi:
      return {
          {"params.N", 5e4, 5e7},
          {"params.horizon_days", 365, 730},
          {"params.seed_infected", 1, 10},
          {"params.beta_waves.*.beta", 0.10, 1.00},
          {"params.gamma", 0.10, 0.33},
          {"params.sigma", 0.20, 0.40},
          {"params.omega", 0.001, 0.0075},
          {"params.mu", 0.0, 1.0 / 365.0},
          {"params.p_A", 0.10, 0.70},
          {"params.alpha", 0.30, 1.00},
          {"params.dispersion_k", 0.10, 1.00},
          {"params.importation_rate", 1e-4, 1e-2, true},
          {"params.seasonal.*.amplitude", 0.05, 0.20},
          {"params.seasonal.*.harmonic", 1, 4},
          {"params.npi.trigger_threshold", 0.001, 0.01},
          {"params.npi.relax_threshold", 0.0002, 0.002},
          {"params.npi.reduction_factor", 0.20, 0.60},
          {"params.npi.min_duration_days", 14, 120},
          {"params.clinical_per_wave.*.p_hosp", 0.02, 0.15},
          {"params.clinical_per_wave.*.p_death_given_hosp", 0.05, 0.30},
          {"params.clinical_per_wave.*.hosp_delay_mean", 5, 12},
          {"params.clinical_per_wave.*.death_delay_mean", 14, 21},
          {"observation.report_rate_initial", 0.05, 0.40},
          {"observation.report_rate_final", 0.25, 0.85},
          {"observation.logistic_midpoint_frac", 0.2, 0.7},
          {"observation.delay_mode_days", 0, 3},
          {"observation.noise_sigma_cases", 0.15, 0.25},
          {"observation.noise_sigma_hosp", 0.10, 0.15},
          {"observation.noise_sigma_deaths", 0.05, 0.10},
      };
    case Domain::EcoButterfly:
      return {
          {"params.S", 2, 32},
          {"params.r.*", 0.15, 0.40},
          {"params.N0.*", std::pow(10.0, 1.7), std::pow(10.0, 2.4)},
          {"params.alpha.*", 0.0, inf},
          {"params.phase", 0.0, 1.0},
      };
    case Domain::EcoLynxHare:
      return {
          {"params.r", 0.4, 0.6},       {"params.K", 80, 120},       {"params.beta", 0.02, 0.04},
          {"params.delta", 0.025, 0.04}, {"params.gamma", 1.0, 2.0}, {"params.rho", 0.0005, 0.002},
          {"params.H0", 20, 80},         {"params.L0", 5, 30},
      };
    case Domain::Chem:
      return {{"raw_yield", 0.0, 1.0}};
    case Domain::Cascade:
      return {{"p", 0.0, 1.0}, {"mask_fraction", 0.0, 1.0}};
  }
  return {};
}

void flatten_numeric(const json& j, const std::string& prefix, std::vector<std::pair<std::string, double>>& out) {
  const auto join = [&](const std::string& k) { return prefix.empty() ? k : prefix + "." + k; };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten_numeric(*it, join(it.key()), out);
  } else if (j.is_array()) {
    for (const auto& e : j) flatten_numeric(e, join("*"), out);
  } else if (j.is_boolean()) {
    out.emplace_back(prefix, j.get<bool>() ? 1.0 : 0.0);
  } else if (j.is_number()) {
    out.emplace_back(prefix, j.get<double>());
  }
}

StatsAccumulator::StatsAccumulator(Domain domain, json config)
    : domain_(domain), config_(std::move(config)), rules_(parameter_supports(domain)), tallies_(rules_.size()) {}

void StatsAccumulator::add(const CorpusRecord& rec) {
  ++records_;
  const json blob = json::parse(rec.params_json);
  std::vector<std::pair<std::string, double>> leaves;
  flatten_numeric(blob, "", leaves);
  for (const auto& [path, v] : leaves) {
    values_[path].push_back(v);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      if (rules_[i].path != path) continue;
      auto& t = tallies_[i];
      ++t.checked;
      t.min = std::min(t.min, v);
      t.max = std::max(t.max, v);
      const bool zero_ok = rules_[i].allow_zero && v == 0.0;
      if (!zero_ok && !(v >= rules_[i].lo && v <= rules_[i].hi)) ++t.violations;
    }
  }
  for (const auto& a : rec.arrays) {
    auto& c = arrays_[a.name];
    if (c.records == 0) {
      c.dtype = dtype_name(a.dtype);
      c.min_dims = c.max_dims = a.dims;
    } else if (c.min_dims.size() == a.dims.size()) {
      for (std::size_t d = 0; d < a.dims.size(); ++d) {
        c.min_dims[d] = std::min(c.min_dims[d], a.dims[d]);
        c.max_dims[d] = std::max(c.max_dims[d], a.dims[d]);
      }
    }
    ++c.records;
    c.elements += a.element_count();
  }

  switch (domain_) {
    case Domain::Epi: {
      const auto& p = blob.at("params");
      const auto waves = p.at("beta_waves").size();
      if (waves < 1 || waves > 5 || p.at("clinical_per_wave").size() != waves) ++wave_count_violations_;
      if (p.at("npi").at("relax_threshold").get<double>() > p.at("npi").at("trigger_threshold").get<double>()) {
        ++relax_above_trigger_;
      }
      break;
    }
    case Domain::Chem:
      if (const auto* y = rec.find("yield")) yields_.push_back(y->get(0));
      ++strata_[blob.at("stratum").get<std::string>()];
      break;
    case Domain::Cascade:
      source_masked_ += blob.at("source_masked").get<bool>();
      infected_total_ += blob.at("infected").get<double>();
      masked_total_ += blob.at("masked").get<double>();
      break;
    default:
      break;
  }
}

json StatsAccumulator::report() const {
  json r;
  r["domain"] = domain_name(domain_);
  r["record_count"] = records_;
  json params = json::object();
  for (const auto& [path, v] : values_) params[path] = summarize(v);
  r["parameters"] = params;
  json arrays = json::object();
  for (const auto& [name, c] : arrays_) {
    arrays[name] = {{"dtype", c.dtype}, {"records", c.records}, {"min_dims", c.min_dims},
                    {"max_dims", c.max_dims}, {"elements", c.elements}};
  }
  r["arrays"] = arrays;
  json checks = json::object();
  if (records_ == 0) {
    r["checks"] = checks;
    return r;
  }

  json supports = json::array();
  std::uint64_t violations = 0;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& t = tallies_[i];
    json e = {{"path", rules_[i].path}, {"lo", rules_[i].lo}, {"hi", rules_[i].hi},
              {"checked", t.checked}, {"violations", t.violations}};
    if (rules_[i].allow_zero) e["allow_zero"] = true;
    if (t.checked > 0) {
      e["observed_min"] = t.min;
      e["observed_max"] = t.max;
    }
    supports.push_back(e);
    violations += t.violations;
  }
  checks["supports"] = {{"rules", supports}, {"violations", violations}};

  const double n = static_cast<double>(records_);
  switch (domain_) {
    case Domain::Epi: {
      json freq = json::object();
      const json* features = nullptr;
      if (config_.contains("epi") && config_["epi"].contains("features")) features = &config_["epi"]["features"];
      for (const auto& [path, key] : kFeatureFlags) {
        const auto it = values_.find(path);
        if (it == values_.end()) continue;
        json e = {{"observed", mean_of(it->second)}};
        if (features) e["target"] = features->at(key);
        freq[std::string(path).substr(7)] = e;
      }
      checks["feature_frequencies"] = freq;
      checks["wave_count_violations"] = wave_count_violations_;
      checks["relax_above_trigger"] = relax_above_trigger_;
      checks["ok"] = violations == 0 && wave_count_violations_ == 0 && relax_above_trigger_ == 0;
      break;
    }
    case Domain::Chem: {
      double threshold = 0.05;
      if (config_.contains("chem")) threshold = config_["chem"].value("failure_threshold", threshold);
      std::uint64_t failures = 0;
      for (double y : yields_) failures += y < threshold;
      json strata = json::object();
      for (const auto& [name, count] : strata_) strata[name] = static_cast<double>(count) / n;
      checks["chem"] = {{"mean", mean_of(yields_)},
                        {"std", sd_of(yields_)},
                        {"failure_threshold", threshold},
                        {"failure_rate", yields_.empty() ? 0.0 : static_cast<double>(failures) / yields_.size()},
                        {"strata", strata}};
      if (config_.contains("chem") && config_["chem"].contains("strata")) {
        checks["chem"]["strata_target"] = config_["chem"]["strata"];
      }
      checks["ok"] = violations == 0;
      break;
    }
    case Domain::Cascade:
      checks["cascade"] = {{"source_masked_frequency", static_cast<double>(source_masked_) / n},
                           {"mean_infected", infected_total_ / n},
                           {"masked_fraction", infected_total_ > 0 ? masked_total_ / infected_total_ : 0.0}};
      checks["ok"] = violations == 0;
      break;
    default:
      checks["ok"] = violations == 0;
      break;
  }
  r["checks"] = checks;
  return r;
}

json corpus_stats(const std::filesystem::path& dir) {
  CorpusReader reader(dir);
  StatsAccumulator acc(reader.manifest().domain, reader.manifest().config);
  CorpusRecord rec;
  while (reader.next(rec)) acc.add(rec);
  json r = acc.report();
  if (reader.manifest().domain == Domain::Chem && r["checks"].contains("chem")) {
    const auto model_path = dir / kChemModelFile;
    if (std::filesystem::exists(model_path)) {
      const json model = json::parse(read_file(model_path));
      r["checks"]["chem"]["target_mean"] = model.at("target_mean");
      r["checks"]["chem"]["target_std"] = model.at("target_std");
    }
  }
  return r;
}

json ValidationReport::to_json() const {
  return {{"ok", ok()}, {"records", records}, {"errors", errors}};
}

namespace {

void check_blob(const CorpusRecord& rec, const CorpusManifest& manifest, std::size_t graph_nodes,
                std::vector<std::string>& errors) {
  const auto fail = [&](const std::string& what) {
    errors.push_back("record " + std::to_string(rec.id) + ": " + what);
  };
  json blob;
  try {
    blob = json::parse(rec.params_json);
  } catch (const json::exception& e) {
    fail(std::string("parameter blob is not JSON: ") + e.what());
    return;
  }
  try {
    switch (manifest.domain) {
      case Domain::Epi:
        validate(blob.at("params").get<EpiParams>());
        validate(blob.at("observation").get<ObservationSpec>());
        break;
      case Domain::EcoButterfly: {
        const auto p = blob.at("params").get<ButterflyParams>();
        validate(p);
        if (const auto* a = rec.find("latent"); a && (a->dims.size() != 2 || a->dims[0] != p.S)) {
          fail("latent rows differ from species count");
        }
        break;
      }
      case Domain::EcoLynxHare:
        validate(blob.at("params").get<LynxHareParams>());
        break;
      case Domain::Chem: {
        const auto& t = blob.at("tuple");
        for (auto name : kComponentNames) {
          if (!t.at(std::string(name)).is_string()) fail("tuple component " + std::string(name) + " is not a string");
        }
        const double y = rec.at("yield").get(0);
        if (!(y >= 0.0 && y <= 1.0)) fail("yield outside [0, 1]");
        break;
      }
      case Domain::Cascade: {
        const auto source = blob.at("source").get<std::uint64_t>();
        const auto& it = rec.at("infection_time");
        const auto& full = rec.at("true_infection_time");
        if (graph_nodes && (it.element_count() != graph_nodes || full.element_count() != graph_nodes)) {
          fail("infection-time length differs from graph size");
        }
        if (source >= full.element_count() || full.get(source) != 0.0) fail("source not infected at time 0");
        if (static_cast<std::uint64_t>(rec.at("source").get(0)) != source) fail("source array disagrees with blob");
        break;
      }
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

}  // namespace

ValidationReport validate_corpus(const std::filesystem::path& dir) {
  ValidationReport rep;
  auto& errors = rep.errors;
  CorpusManifest manifest;
  try {
    manifest = read_manifest(dir);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
    return rep;
  }
  if (config_digest(manifest.config) != manifest.config_digest) {
    errors.push_back("config digest does not match the recorded configuration");
  }
  for (const auto& s : manifest.shards) {
    const auto path = dir / s.file;
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) {
      errors.push_back("missing shard " + s.file);
      continue;
    }
    if (size != s.bytes) errors.push_back("shard " + s.file + " size differs from manifest");
    if (sha256_file_hex(path) != s.sha256) errors.push_back("shard " + s.file + " sha256 differs from manifest");
  }
  const auto check_side = [&](const std::string& file, const std::string& sha) {
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) {
      errors.push_back("missing side file " + file);
    } else if (sha256_file_hex(path) != sha) {
      errors.push_back("side file " + file + " sha256 differs from manifest");
    }
  };
  std::size_t graph_nodes = 0;
  if (manifest.extra.contains("chem_model")) {
    check_side(manifest.extra["chem_model"].at("file"), manifest.extra["chem_model"].at("sha256"));
  }
  if (manifest.extra.contains("graph")) {
    const auto& g = manifest.extra["graph"];
    check_side(g.at("edge_list"), g.at("edge_list_sha256"));
    check_side(g.at("shared_shard"), g.at("shared_shard_sha256"));
    graph_nodes = g.at("nodes").get<std::size_t>();
  }
  if (!errors.empty()) return rep;

  std::set<std::uint64_t> ids;
  try {
    CorpusReader reader(dir);
    CorpusRecord rec;
    while (reader.next(rec)) {
      ++rep.records;
      if (!ids.insert(rec.id).second) errors.push_back("duplicate record id " + std::to_string(rec.id));
      if (rec.domain != manifest.domain) errors.push_back("record " + std::to_string(rec.id) + " has the wrong domain");
      try {
        validate_record(rec);
      } catch (const std::exception& e) {
        errors.push_back("record " + std::to_string(rec.id) + ": " + e.what());
      }
      check_blob(rec, manifest, graph_nodes, errors);
      if (errors.size() > kMaxReportedErrors) {
        errors.push_back("stopping after " + std::to_string(kMaxReportedErrors) + " errors");
        break;
      }
    }
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  return rep;
}

std::vector<std::filesystem::path> export_csv(const std::filesystem::path& corpus_dir,
                                              const std::filesystem::path& out_dir, const ExportOptions& options) {
  CorpusReader reader(corpus_dir);
  const Domain domain = reader.manifest().domain;
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / (domain_name(domain) + ".csv");
  auto tmp = path;
  tmp += ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  if (!out) throw IoError("cannot write " + tmp.string());
  std::vector<std::filesystem::path> written{path};
  CorpusRecord rec;

  switch (domain) {
    case Domain::Epi: {
      out << "record_id," << (options.weekly ? "week" : "day") << ",series_name,true_value,reported_value\n";
      const std::pair<const char*, const char*> series[] = {
          {"cases", "cases"}, {"hospitalizations", "hospitalizations"}, {"deaths", "deaths"}};
      while (reader.next(rec)) {
        for (const auto& [label, suffix] : series) {
          const auto* t = rec.find(std::string("true_") + suffix);
          const auto* o = rec.find(std::string("reported_") + suffix);
          if (!t || !o) continue;
          const std::size_t T = t->element_count();
          if (options.weekly) {
            for (std::size_t w = 0; (w + 1) * 7 <= T; ++w) {
              std::int64_t ts = 0, os = 0;
              for (std::size_t d = w * 7; d < (w + 1) * 7; ++d) {
                ts += static_cast<std::int64_t>(t->get(d));
                os += static_cast<std::int64_t>(o->get(d));
              }
              out << rec.id << ',' << w << ',' << label << ',' << ts << ',' << os << '\n';
            }
          } else {
            for (std::size_t d = 0; d < T; ++d) {
              out << rec.id << ',' << d << ',' << label << ',' << static_cast<std::int64_t>(t->get(d)) << ','
                  << static_cast<std::int64_t>(o->get(d)) << '\n';
            }
          }
        }
      }
      break;
    }
    case Domain::EcoButterfly:
    case Domain::EcoLynxHare:
      out << "record_id,species,year,latent,observed_log10\n";
      while (reader.next(rec)) {
        const auto& lat = rec.at("latent");
        const auto* obs = rec.find("observed_log10");
        const auto S = lat.dims.at(0), Y = lat.dims.at(1);
        for (std::uint64_t s = 0; s < S; ++s) {
          for (std::uint64_t y = 0; y < Y; ++y) {
            out << rec.id << ',' << s << ',' << y << ',' << fmt(lat.get(s * Y + y), 17) << ','
                << (obs ? fmt(obs->get(s * Y + y), 9) : "") << '\n';
          }
        }
      }
      break;
    case Domain::Chem:
      out << "record_id";
      for (auto name : kComponentNames) out << ',' << name;
      out << ",yield,stratum,is_failure\n";
      while (reader.next(rec)) {
        const json blob = json::parse(rec.params_json);
        out << rec.id;
        for (auto name : kComponentNames) out << ',' << csv_field(blob.at("tuple").at(std::string(name)));
        out << ',' << fmt(rec.at("yield").get(0), 17) << ',' << blob.at("stratum").get<std::string>() << ','
            << (blob.at("is_failure").get<bool>() ? 1 : 0) << '\n';
      }
      break;
    case Domain::Cascade: {
      out << "record_id,node,infection_time,masked\n";
      while (reader.next(rec)) {
        const auto& it = rec.at("infection_time");
        const auto& obs = rec.at("observed");
        for (std::size_t v = 0; v < it.element_count(); ++v) {
          out << rec.id << ',' << v << ',' << static_cast<std::int64_t>(it.get(v)) << ','
              << (obs.get(v) == 0.0 ? 1 : 0) << '\n';
        }
      }
      const auto edges = corpus_dir / kGraphEdgesFile;
      if (std::filesystem::exists(edges)) {
        std::filesystem::copy_file(edges, out_dir / kGraphEdgesFile,
                                   std::filesystem::copy_options::overwrite_existing);
        written.push_back(out_dir / kGraphEdgesFile);
      }
      break;
    }
  }
  out.close();
  if (!out) {
    std::filesystem::remove(tmp);
    throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
  return written;
}

}  // namespace forge
