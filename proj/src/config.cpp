#include "forge/config.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <sstream>

#include "forge/binary_io.hpp"
#include "forge/errors.hpp"

namespace forge {
namespace {

using nlohmann::json;

bool same_kind(const json& def, const json& val) {
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return true;
}

void overlay(json& base, const json& over, const std::string& where) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    auto b = base.find(it.key());
    if (b == base.end()) throw ValidationError("unknown config key '" + path + "'");
    if (!same_kind(*b, *it)) throw ValidationError("config key '" + path + "' has the wrong type");
    if (b->is_object() && it->is_object() && path != "chem.heuristics") {
      overlay(*b, *it, path);
    } else if (b->is_number_float() && it->is_number()) {
      *b = it->get<double>();
    } else {
      *b = *it;
    }
  }
}

double num(const json& j, const char* key) { return j.at(key).get<double>(); }

}  // namespace

json heuristics_to_json(const std::vector<FailureHeuristic>& heuristics) {
  json out = json::array();
  for (const auto& h : heuristics) {
    json conds = json::object();
    for (const auto& [comp, members] : h.conditions) {
      conds[std::string(kComponentNames[static_cast<std::size_t>(comp)])] = members;
    }
    out.push_back({{"name", h.name}, {"boost", h.boost}, {"conditions", conds}});
  }
  return out;
}

json default_config(Domain domain) {
  json cfg;
  cfg["domain"] = domain_name(domain);
  cfg["generate"] = {{"shard_size", 1000}, {"params_only", false}};
  switch (domain) {
    case Domain::Epi: {
      const EpiFeatureProbabilities f;
      cfg["epi"] = {{"features",
                     {{"exposed", f.exposed},
                      {"asymptomatic", f.asymptomatic},
                      {"npi", f.npi},
                      {"demography", f.demography},
                      {"waning", f.waning},
                      {"superspreading", f.superspreading},
                      {"importation", f.importation},
                      {"seasonality", f.seasonality}}},
                    {"observe", true},
                    {"substeps_per_day", 16}};
      break;
    }
    case Domain::EcoButterfly:
      cfg["eco_butterfly"] = {{"horizon_years", 100},  {"step", 0.05},        {"overdispersion", 2000.0},
                              {"log_noise_sd", 0.08},  {"environment", true}, {"seasonal", true},
                              {"process_noise", true}, {"observation", true}};
      break;
    case Domain::EcoLynxHare:
      cfg["eco_lynxhare"] = {{"horizon_years", 100},  {"step", 0.01},        {"overdispersion", 2000.0},
                             {"log_noise_sd", 0.08},  {"pelt_scale", 1.0},   {"process_noise", true},
                             {"observation", true}};
      break;
    case Domain::Chem: {
      const FailureConfig f = FailureConfig::defaults();
      cfg["chem"] = {{"reactions_csv", ""},
                     {"standin_seed", 0},
                     {"min_support", 3},
                     {"variance_bins", 40},
                     {"analysis_fraction", 0.75},
                     {"split_seed", 0},
                     {"target_mean", -1.0},
                     {"target_std", -1.0},
                     {"failure_threshold", f.threshold},
                     {"empirical_weight", f.empirical_weight},
                     {"failure_ceiling", f.ceiling},
                     {"heuristics", heuristics_to_json(f.heuristics)},
                     {"strata", {{"memorized", 0.60}, {"partial", 0.30}, {"uniform", 0.10},
                                 {"high_yield_quantile", 0.75}}}};
      break;
    }
    case Domain::Cascade:
      cfg["cascade"] = {{"nodes", 1000},         {"m", 5},          {"p", 0.05},
                        {"max_steps", 15},       {"mask_fraction", 0.2},
                        {"mask_rounding", "stochastic"},            {"lappe_k", 16}};
      break;
  }
  return cfg;
}

json resolve_config(Domain domain, const json& overrides) {
  json cfg = default_config(domain);
  const std::string section = domain_name(domain);
  if (!overrides.is_object()) throw ValidationError("config must be a table");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (it.key() == "generate" || it.key() == section) {
      if (!it->is_object()) throw ValidationError("config section '" + it.key() + "' must be a table");
      overlay(cfg[it.key()], *it, it.key());
    } else if (it.key() == "domain") {
      if (!it->is_string() || parse_domain(it->get<std::string>()) != domain) {
        throw ValidationError("config declares domain " + it->dump() + ", generating " + section);
      }
    } else {
      bool other_domain = false;
      for (Domain d : {Domain::Epi, Domain::EcoButterfly, Domain::EcoLynxHare, Domain::Chem, Domain::Cascade}) {
        other_domain = other_domain || domain_name(d) == it.key();
      }
      if (!other_domain) throw ValidationError("unknown config section '" + it.key() + "'");
    }
  }
  if (cfg["generate"]["shard_size"].get<long long>() < 1) throw ValidationError("generate.shard_size must be >= 1");
  return cfg;
}

json parse_toml(const std::string& text, const std::string& source) {
  try {
    const toml::table tbl = toml::parse(text, source);
    std::ostringstream os;
    os << toml::json_formatter{tbl};
    return json::parse(os.str());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "cannot parse " << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ValidationError(os.str());
  }
}

json load_config(Domain domain, const std::filesystem::path& toml_path) {
  if (toml_path.empty()) return resolve_config(domain, json::object());
  return resolve_config(domain, parse_toml(read_file(toml_path), toml_path.string()));
}

EpiFeatureProbabilities epi_features_from_config(const json& section) {
  const json& f = section.at("features");
  EpiFeatureProbabilities p;
  p.exposed = num(f, "exposed");
  p.asymptomatic = num(f, "asymptomatic");
  p.npi = num(f, "npi");
  p.demography = num(f, "demography");
  p.waning = num(f, "waning");
  p.superspreading = num(f, "superspreading");
  p.importation = num(f, "importation");
  p.seasonality = num(f, "seasonality");
  return p;
}

ChemFitOptions chem_options_from_config(const json& section) {
  ChemFitOptions o;
  o.min_support = section.at("min_support").get<std::size_t>();
  o.variance_bins = section.at("variance_bins").get<std::size_t>();
  o.analysis_fraction = num(section, "analysis_fraction");
  o.split_seed = section.at("split_seed").get<std::uint64_t>();
  o.target_mean = num(section, "target_mean");
  o.target_std = num(section, "target_std");
  o.failure.threshold = num(section, "failure_threshold");
  o.failure.empirical_weight = num(section, "empirical_weight");
  o.failure.ceiling = num(section, "failure_ceiling");
  o.failure.heuristics.clear();
  for (const auto& h : section.at("heuristics")) {
    FailureHeuristic fh;
    try {
      fh.name = h.at("name").get<std::string>();
      fh.boost = h.at("boost").get<double>();
      for (auto it = h.at("conditions").begin(); it != h.at("conditions").end(); ++it) {
        fh.conditions.emplace_back(component_from_name(it.key()), it->get<std::set<std::string>>());
      }
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed chem.heuristics entry: ") + e.what());
    } catch (const VocabularyError& e) {
      throw ValidationError(std::string("malformed chem.heuristics entry: ") + e.what());
    }
    o.failure.heuristics.push_back(std::move(fh));
  }
  return o;
}

ChemStrata chem_strata_from_config(const json& section) {
  const json& s = section.at("strata");
  ChemStrata st;
  st.memorized = num(s, "memorized");
  st.partial = num(s, "partial");
  st.uniform = num(s, "uniform");
  st.high_yield_quantile = num(s, "high_yield_quantile");
  return st;
}

}  // namespace forge
