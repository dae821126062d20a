#pragma once

// JSON renderings of the sampled parameter structs used in record blobs.

#include <nlohmann/json.hpp>

#include "forge/eco.hpp"
#include "forge/epi.hpp"
#include "forge/observation.hpp"

namespace forge {

void to_json(nlohmann::json& j, const BetaWave& v);
void from_json(const nlohmann::json& j, BetaWave& v);
void to_json(nlohmann::json& j, const SeasonalHarmonic& v);
void from_json(const nlohmann::json& j, SeasonalHarmonic& v);
void to_json(nlohmann::json& j, const ClinicalWave& v);
void from_json(const nlohmann::json& j, ClinicalWave& v);
void to_json(nlohmann::json& j, const InterventionSpec& v);
void from_json(const nlohmann::json& j, InterventionSpec& v);
void to_json(nlohmann::json& j, const EpiParams& v);
void from_json(const nlohmann::json& j, EpiParams& v);
void to_json(nlohmann::json& j, const InterventionWindow& v);
void from_json(const nlohmann::json& j, InterventionWindow& v);
void to_json(nlohmann::json& j, const ObservationSpec& v);
void from_json(const nlohmann::json& j, ObservationSpec& v);
void to_json(nlohmann::json& j, const ButterflyParams& v);
void from_json(const nlohmann::json& j, ButterflyParams& v);
void to_json(nlohmann::json& j, const LynxHareParams& v);
void from_json(const nlohmann::json& j, LynxHareParams& v);

}  // namespace forge
