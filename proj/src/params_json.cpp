#include "forge/params_json.hpp"

namespace forge {

using nlohmann::json;

void to_json(json& j, const BetaWave& v) { j = {{"start_day", v.start_day}, {"beta", v.beta}}; }
void from_json(const json& j, BetaWave& v) {
  j.at("start_day").get_to(v.start_day);
  j.at("beta").get_to(v.beta);
}

void to_json(json& j, const SeasonalHarmonic& v) {
  j = {{"amplitude", v.amplitude}, {"harmonic", v.harmonic}, {"phase", v.phase}};
}
void from_json(const json& j, SeasonalHarmonic& v) {
  j.at("amplitude").get_to(v.amplitude);
  j.at("harmonic").get_to(v.harmonic);
  j.at("phase").get_to(v.phase);
}

void to_json(json& j, const ClinicalWave& v) {
  j = {{"p_hosp", v.p_hosp},
       {"p_death_given_hosp", v.p_death_given_hosp},
       {"hosp_delay_mean", v.hosp_delay_mean},
       {"death_delay_mean", v.death_delay_mean}};
}
void from_json(const json& j, ClinicalWave& v) {
  j.at("p_hosp").get_to(v.p_hosp);
  j.at("p_death_given_hosp").get_to(v.p_death_given_hosp);
  j.at("hosp_delay_mean").get_to(v.hosp_delay_mean);
  j.at("death_delay_mean").get_to(v.death_delay_mean);
}

void to_json(json& j, const InterventionSpec& v) {
  j = {{"trigger_threshold", v.trigger_threshold},
       {"relax_threshold", v.relax_threshold},
       {"reduction_factor", v.reduction_factor},
       {"min_duration_days", v.min_duration_days},
       {"relax_persistence_days", v.relax_persistence_days}};
}
void from_json(const json& j, InterventionSpec& v) {
  j.at("trigger_threshold").get_to(v.trigger_threshold);
  j.at("relax_threshold").get_to(v.relax_threshold);
  j.at("reduction_factor").get_to(v.reduction_factor);
  j.at("min_duration_days").get_to(v.min_duration_days);
  j.at("relax_persistence_days").get_to(v.relax_persistence_days);
}

void to_json(json& j, const EpiParams& v) {
  j = {{"N", v.N},
       {"has_E", v.has_E},
       {"has_A", v.has_A},
       {"has_waning", v.has_waning},
       {"has_demography", v.has_demography},
       {"has_npi", v.has_npi},
       {"has_superspreading", v.has_superspreading},
       {"beta_waves", v.beta_waves},
       {"gamma", v.gamma},
       {"sigma", v.sigma},
       {"omega", v.omega},
       {"mu", v.mu},
       {"p_A", v.p_A},
       {"alpha", v.alpha},
       {"seasonal", v.seasonal},
       {"dispersion_k", v.dispersion_k},
       {"importation_rate", v.importation_rate},
       {"npi", v.npi},
       {"clinical_per_wave", v.clinical_per_wave},
       {"horizon_days", v.horizon_days},
       {"seed_infected", v.seed_infected},
       {"substeps_per_day", v.substeps_per_day},
       {"delay_gamma_shape", v.delay_gamma_shape}};
}
void from_json(const json& j, EpiParams& v) {
  j.at("N").get_to(v.N);
  j.at("has_E").get_to(v.has_E);
  j.at("has_A").get_to(v.has_A);
  j.at("has_waning").get_to(v.has_waning);
  j.at("has_demography").get_to(v.has_demography);
  j.at("has_npi").get_to(v.has_npi);
  j.at("has_superspreading").get_to(v.has_superspreading);
  j.at("beta_waves").get_to(v.beta_waves);
  j.at("gamma").get_to(v.gamma);
  j.at("sigma").get_to(v.sigma);
  j.at("omega").get_to(v.omega);
  j.at("mu").get_to(v.mu);
  j.at("p_A").get_to(v.p_A);
  j.at("alpha").get_to(v.alpha);
  j.at("seasonal").get_to(v.seasonal);
  j.at("dispersion_k").get_to(v.dispersion_k);
  j.at("importation_rate").get_to(v.importation_rate);
  j.at("npi").get_to(v.npi);
  j.at("clinical_per_wave").get_to(v.clinical_per_wave);
  j.at("horizon_days").get_to(v.horizon_days);
  j.at("seed_infected").get_to(v.seed_infected);
  v.substeps_per_day = j.value("substeps_per_day", 16);
  v.delay_gamma_shape = j.value("delay_gamma_shape", 4.0);
}

void to_json(json& j, const InterventionWindow& v) {
  j = {{"start_day", v.start_day}, {"end_day", v.end_day}, {"reduction", v.reduction}};
}
void from_json(const json& j, InterventionWindow& v) {
  j.at("start_day").get_to(v.start_day);
  j.at("end_day").get_to(v.end_day);
  j.at("reduction").get_to(v.reduction);
}

void to_json(json& j, const ObservationSpec& v) {
  j = {{"report_rate_initial", v.report_rate_initial},
       {"report_rate_final", v.report_rate_final},
       {"logistic_midpoint_frac", v.logistic_midpoint_frac},
       {"logistic_steepness", v.logistic_steepness},
       {"delay_mode_days", v.delay_mode_days},
       {"delay_success_prob", v.delay_success_prob},
       {"weekday_effects", v.weekday_effects},
       {"noise_sigma_cases", v.noise_sigma_cases},
       {"noise_sigma_hosp", v.noise_sigma_hosp},
       {"noise_sigma_deaths", v.noise_sigma_deaths}};
}
void from_json(const json& j, ObservationSpec& v) {
  j.at("report_rate_initial").get_to(v.report_rate_initial);
  j.at("report_rate_final").get_to(v.report_rate_final);
  j.at("logistic_midpoint_frac").get_to(v.logistic_midpoint_frac);
  j.at("logistic_steepness").get_to(v.logistic_steepness);
  j.at("delay_mode_days").get_to(v.delay_mode_days);
  j.at("delay_success_prob").get_to(v.delay_success_prob);
  j.at("weekday_effects").get_to(v.weekday_effects);
  j.at("noise_sigma_cases").get_to(v.noise_sigma_cases);
  j.at("noise_sigma_hosp").get_to(v.noise_sigma_hosp);
  j.at("noise_sigma_deaths").get_to(v.noise_sigma_deaths);
}

void to_json(json& j, const ButterflyParams& v) {
  j = {{"S", v.S},
       {"r", v.r},
       {"N0", v.N0},
       {"K", v.K},
       {"alpha", v.alpha},
       {"seasonal_amplitude", v.seasonal_amplitude},
       {"phase", v.phase},
       {"env_initial_mean", v.env_initial_mean},
       {"env_initial_sd", v.env_initial_sd},
       {"env_rho", v.env_rho},
       {"env_sd", v.env_sd},
       {"horizon_years", v.horizon_years}};
}
void from_json(const json& j, ButterflyParams& v) {
  j.at("S").get_to(v.S);
  j.at("r").get_to(v.r);
  j.at("N0").get_to(v.N0);
  j.at("K").get_to(v.K);
  j.at("alpha").get_to(v.alpha);
  j.at("seasonal_amplitude").get_to(v.seasonal_amplitude);
  j.at("phase").get_to(v.phase);
  j.at("env_initial_mean").get_to(v.env_initial_mean);
  j.at("env_initial_sd").get_to(v.env_initial_sd);
  j.at("env_rho").get_to(v.env_rho);
  j.at("env_sd").get_to(v.env_sd);
  j.at("horizon_years").get_to(v.horizon_years);
}

void to_json(json& j, const LynxHareParams& v) {
  j = {{"r", v.r},         {"K", v.K},         {"beta", v.beta},   {"delta", v.delta},
       {"gamma", v.gamma}, {"rho", v.rho},     {"H0", v.H0},       {"L0", v.L0},
       {"H_max", v.H_max}, {"L_max", v.L_max}, {"horizon_years", v.horizon_years},
       {"pelt_scale", v.pelt_scale}};
}
void from_json(const json& j, LynxHareParams& v) {
  j.at("r").get_to(v.r);
  j.at("K").get_to(v.K);
  j.at("beta").get_to(v.beta);
  j.at("delta").get_to(v.delta);
  j.at("gamma").get_to(v.gamma);
  j.at("rho").get_to(v.rho);
  j.at("H0").get_to(v.H0);
  j.at("L0").get_to(v.L0);
  j.at("H_max").get_to(v.H_max);
  j.at("L_max").get_to(v.L_max);
  j.at("horizon_years").get_to(v.horizon_years);
  j.at("pelt_scale").get_to(v.pelt_scale);
}

}  // namespace forge
