#pragma once

// Generator configuration: TOML files overlaid on per-domain defaults and
// resolved to a canonical JSON document that the manifest digest hashes.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "forge/chem.hpp"
#include "forge/corpus.hpp"
#include "forge/epi.hpp"

namespace forge {

// Resolved layout: {"domain": name, "generate": {...}, <domain name>: {...}}.
nlohmann::json default_config(Domain domain);

// Unknown keys and type changes throw ValidationError. Sections belonging to
// other domains are ignored.
nlohmann::json resolve_config(Domain domain, const nlohmann::json& overrides);
nlohmann::json load_config(Domain domain, const std::filesystem::path& toml_path);
nlohmann::json parse_toml(const std::string& text, const std::string& source = "config");

EpiFeatureProbabilities epi_features_from_config(const nlohmann::json& section);
ChemFitOptions chem_options_from_config(const nlohmann::json& section);
ChemStrata chem_strata_from_config(const nlohmann::json& section);
nlohmann::json heuristics_to_json(const std::vector<FailureHeuristic>& heuristics);

}  // namespace forge
