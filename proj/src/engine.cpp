#include "forge/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "forge/binary_io.hpp"
#include "forge/cascade.hpp"
#include "forge/chem.hpp"
#include "forge/config.hpp"
#include "forge/eco.hpp"
#include "forge/epi.hpp"
#include "forge/errors.hpp"
#include "forge/observation.hpp"
#include "forge/params_json.hpp"

namespace forge {
namespace {

using nlohmann::json;

std::vector<std::int32_t> narrow(const CountSeries& s, const char* what) {
  std::vector<std::int32_t> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] > std::numeric_limits<std::int32_t>::max()) {
      throw ValidationError(std::string("count out of i32 range in ") + what);
    }
    out[i] = static_cast<std::int32_t>(s[i]);
  }
  return out;
}

void push_counts(std::vector<NamedArray>& arrays, const std::string& name, const CountSeries& s) {
  const auto v = narrow(s, name.c_str());
  arrays.push_back(NamedArray::i32(name, v));
}

class EpiFactory final : public RecordFactory {
 public:
  EpiFactory(const json& config, std::uint64_t seed)
      : seed_(seed),
        features_(epi_features_from_config(config.at("epi"))),
        observe_(config.at("epi").at("observe").get<bool>()),
        params_only_(config.at("generate").at("params_only").get<bool>()),
        substeps_(config.at("epi").at("substeps_per_day").get<int>()) {
    if (substeps_ < 1) throw ValidationError("epi.substeps_per_day must be >= 1");
  }

  CorpusRecord make(std::uint64_t id) const override {
    const RngStream root = substream(seed_, id);
    RngStream prng = root.child(kTagParams);
    EpiParams p = sample_epi_params(features_, prng);
    p.substeps_per_day = substeps_;
    RngStream orng = root.child(kTagObservationSpec);
    const ObservationSpec spec = observe_ ? sample_observation_spec(orng) : ObservationSpec::identity();

    CorpusRecord rec;
    rec.id = id;
    rec.domain = Domain::Epi;
    json blob = {{"params", p}, {"observation", spec}, {"r0", compute_r0(p)}, {"closed", p.closed()}};
    if (params_only_) {
      rec.params_json = blob.dump();
      return rec;
    }

    RngStream srng = root.child(kTagSimulate);
    EpiTrajectory t = simulate_epidemic(p, srng);
    RngStream obs = root.child(kTagObserve);
    t.reported_daily = observe(t.true_daily, spec, obs);
    blob["intervention_log"] = t.intervention_log;
    rec.params_json = blob.dump();

    auto& a = rec.arrays;
    push_counts(a, "true_cases", t.true_daily.cases);
    push_counts(a, "true_hospitalizations", t.true_daily.hospitalizations);
    push_counts(a, "true_deaths", t.true_daily.deaths);
    push_counts(a, "reported_cases", t.reported_daily.cases);
    push_counts(a, "reported_hospitalizations", t.reported_daily.hospitalizations);
    push_counts(a, "reported_deaths", t.reported_daily.deaths);
    push_counts(a, "symptomatic", t.symptomatic_daily);
    const auto L = static_cast<std::uint64_t>(t.latent.S.size());
    std::vector<std::int32_t> latent;
    latent.reserve(5 * L);
    for (const CountSeries* s : {&t.latent.S, &t.latent.E, &t.latent.A, &t.latent.I, &t.latent.R}) {
      const auto v = narrow(*s, "latent");
      latent.insert(latent.end(), v.begin(), v.end());
    }
    a.push_back(NamedArray::i32("latent_seair", latent, {5, L}));
    a.push_back(NamedArray::f32("rt", t.rt_daily));
    a.push_back(NamedArray::f32("beta_effective", t.beta_effective));
    a.push_back(NamedArray::f32("npi_factor", t.npi_factor));
    return rec;
  }

 private:
  std::uint64_t seed_;
  EpiFeatureProbabilities features_;
  bool observe_;
  bool params_only_;
  int substeps_;
};

EcoObservation eco_observation(const json& s) {
  EcoObservation o;
  o.overdispersion = s.at("overdispersion").get<double>();
  o.log_noise_sd = s.at("log_noise_sd").get<double>();
  if (!(o.overdispersion > 0.0) || !(o.log_noise_sd >= 0.0)) {
    throw ValidationError("eco observation needs overdispersion > 0 and log_noise_sd >= 0");
  }
  return o;
}

json stages_json(const EcoStages& s) {
  return {{"environment", s.environment}, {"seasonal", s.seasonal}, {"process_noise", s.process_noise},
          {"observation", s.observation}};
}

void push_matrix(CorpusRecord& rec, const SpeciesMatrix& m, bool as_f32, const std::string& name) {
  const std::vector<std::uint64_t> dims{m.species, m.years};
  rec.arrays.push_back(as_f32 ? NamedArray::f32(name, m.values, dims) : NamedArray::f64(name, m.values, dims));
}

class ButterflyFactory final : public RecordFactory {
 public:
  ButterflyFactory(const json& config, std::uint64_t seed) : seed_(seed) {
    const json& s = config.at("eco_butterfly");
    horizon_ = s.at("horizon_years").get<int>();
    step_ = s.at("step").get<double>();
    obs_ = eco_observation(s);
    stages_.environment = s.at("environment").get<bool>();
    stages_.seasonal = s.at("seasonal").get<bool>();
    stages_.process_noise = s.at("process_noise").get<bool>();
    stages_.observation = s.at("observation").get<bool>();
    params_only_ = config.at("generate").at("params_only").get<bool>();
  }

  CorpusRecord make(std::uint64_t id) const override {
    const RngStream root = substream(seed_, id);
    RngStream prng = root.child(kTagParams);
    ButterflyParams p = sample_butterfly_community(prng);
    p.horizon_years = horizon_;
    CorpusRecord rec;
    rec.id = id;
    rec.domain = Domain::EcoButterfly;
    rec.params_json = json{{"params", p}, {"stages", stages_json(stages_)},
                           {"observation", {{"overdispersion", obs_.overdispersion},
                                            {"log_noise_sd", obs_.log_noise_sd}}},
                           {"step", step_}}
                          .dump();
    if (params_only_) return rec;
    RngStream srng = root.child(kTagSimulate);
    const EcoTrajectory t = simulate_butterfly(p, srng, stages_, obs_, step_);
    push_matrix(rec, t.latent, false, "latent");
    push_matrix(rec, t.observed_log10, true, "observed_log10");
    rec.arrays.push_back(NamedArray::f64("environment", t.environment));
    return rec;
  }

 private:
  std::uint64_t seed_;
  int horizon_ = 100;
  double step_ = 0.05;
  EcoObservation obs_;
  EcoStages stages_;
  bool params_only_ = false;
};

class LynxHareFactory final : public RecordFactory {
 public:
  LynxHareFactory(const json& config, std::uint64_t seed) : seed_(seed) {
    const json& s = config.at("eco_lynxhare");
    horizon_ = s.at("horizon_years").get<int>();
    step_ = s.at("step").get<double>();
    pelt_scale_ = s.at("pelt_scale").get<double>();
    obs_ = eco_observation(s);
    stages_.environment = false;
    stages_.seasonal = false;
    stages_.process_noise = s.at("process_noise").get<bool>();
    stages_.observation = s.at("observation").get<bool>();
    params_only_ = config.at("generate").at("params_only").get<bool>();
  }

  CorpusRecord make(std::uint64_t id) const override {
    const RngStream root = substream(seed_, id);
    RngStream prng = root.child(kTagParams);
    LynxHareParams p = sample_lynx_hare(prng);
    p.horizon_years = horizon_;
    p.pelt_scale = pelt_scale_;
    CorpusRecord rec;
    rec.id = id;
    rec.domain = Domain::EcoLynxHare;
    rec.params_json = json{{"params", p}, {"stages", stages_json(stages_)},
                           {"observation", {{"overdispersion", obs_.overdispersion},
                                            {"log_noise_sd", obs_.log_noise_sd}}},
                           {"step", step_}}
                          .dump();
    if (params_only_) return rec;
    RngStream srng = root.child(kTagSimulate);
    const EcoTrajectory t = simulate_lynx_hare(p, srng, stages_, obs_, step_);
    push_matrix(rec, t.latent, false, "latent");
    push_matrix(rec, t.observed_log10, true, "observed_log10");
    return rec;
  }

 private:
  std::uint64_t seed_;
  int horizon_ = 100;
  double step_ = 0.01;
  double pelt_scale_ = 1.0;
  EcoObservation obs_;
  EcoStages stages_;
  bool params_only_ = false;
};

json chem_model_json(const ChemYieldModel& m, const json& section, bool standin) {
  json vocab = json::object();
  for (std::size_t c = 0; c < kComponents; ++c) {
    json names = json::array();
    for (std::uint32_t i = 0; i < m.vocab.size(static_cast<Component>(c)); ++i) {
      names.push_back(m.vocab.name(static_cast<Component>(c), i));
    }
    vocab[std::string(kComponentNames[c])] = names;
  }
  json bins = json::array();
  for (const auto& b : m.variance_bins) {
    bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"center", b.center},
                    {"variance", b.variance}, {"count", b.count}});
  }
  std::size_t pair_terms = 0, three_terms = 0;
  for (const auto& t : m.pairs) pair_terms += t.delta.size();
  for (const auto& t : m.threeways) three_terms += t.delta.size();
  return {{"source", standin ? "standin" : section.at("reactions_csv").get<std::string>()},
          {"vocabulary", vocab},
          {"global_mean", m.main.global_mean},
          {"pair_terms", pair_terms},
          {"threeway_terms", three_terms},
          {"memorized_tuples", m.memorized.size()},
          {"failure_threshold", m.failure.threshold},
          {"empirical_weight", m.failure.empirical_weight},
          {"failure_ceiling", m.failure.ceiling},
          {"heuristics", heuristics_to_json(m.failure.heuristics)},
          {"variance_bins", bins},
          {"target_mean", m.target_mean},
          {"target_std", m.target_std}};
}

class ChemFactory final : public RecordFactory {
 public:
  ChemFactory(const json& config, std::uint64_t seed, std::uint64_t count) {
    const json& s = config.at("chem");
    ChemFitOptions options = chem_options_from_config(s);
    const std::string csv = s.at("reactions_csv").get<std::string>();
    ChemDataset data;
    const bool standin = csv.empty();
    if (standin) {
      data = generate_standin_reactions(s.at("standin_seed").get<std::uint64_t>());
      if (options.target_mean < 0.0) options.target_mean = kStandinTargetMean;
      if (options.target_std < 0.0) options.target_std = kStandinTargetStd;
    } else {
      data = read_reactions_csv(csv);
    }
    model_ = fit_chem_model(data, options);
    model_json_ = chem_model_json(model_, s, standin);
    corpus_ = generate_chem_corpus(model_, count, substream(seed, kSharedChemStream), chem_strata_from_config(s));
  }

  CorpusRecord make(std::uint64_t id) const override {
    const ChemRow& row = corpus_.data.rows.at(id);
    json tuple = json::object();
    for (std::size_t c = 0; c < kComponents; ++c) tuple[std::string(kComponentNames[c])] = row.tuple.parts[c];
    CorpusRecord rec;
    rec.id = id;
    rec.domain = Domain::Chem;
    rec.params_json = json{{"tuple", tuple},
                           {"stratum", std::string(stratum_name(row.stratum))},
                           {"is_failure", row.yield < model_.failure.threshold},
                           {"raw_yield", corpus_.raw[id]}}
                          .dump();
    std::vector<std::int32_t> codes(corpus_.codes[id].begin(), corpus_.codes[id].end());
    rec.arrays.push_back(NamedArray::i32("tuple_codes", codes));
    const double y[] = {row.yield};
    rec.arrays.push_back(NamedArray::f64("yield", y));
    return rec;
  }

  void finish(const std::filesystem::path& dir, CorpusManifest& manifest) const override {
    const std::string text = model_json_.dump(2) + "\n";
    atomic_write_file(dir / kChemModelFile, text);
    manifest.extra["chem_model"] = {{"file", kChemModelFile}, {"sha256", sha256_hex(text)}};
  }

 private:
  ChemYieldModel model_;
  json model_json_;
  ChemCorpus corpus_;
};

class CascadeFactory final : public RecordFactory {
 public:
  CascadeFactory(const json& config, std::uint64_t seed) {
    const json& s = config.at("cascade");
    const auto n = s.at("nodes").get<std::size_t>();
    const auto m = s.at("m").get<std::size_t>();
    p_ = s.at("p").get<double>();
    max_steps_ = s.at("max_steps").get<int>();
    mask_fraction_ = s.at("mask_fraction").get<double>();
    const auto rounding = s.at("mask_rounding").get<std::string>();
    if (rounding == "stochastic") {
      rounding_ = MaskRounding::Stochastic;
    } else if (rounding == "floor") {
      rounding_ = MaskRounding::Floor;
    } else {
      throw ValidationError("cascade.mask_rounding must be \"stochastic\" or \"floor\"");
    }
    lappe_k_ = s.at("lappe_k").get<std::size_t>();
    seed_ = seed;
    RngStream grng = substream(seed, kSharedGraphStream);
    graph_ = generate_ba_graph(n, m, grng);
    graph_.meta.seed = seed;
  }

  CorpusRecord make(std::uint64_t id) const override {
    const RngStream root = substream(seed_, id);
    RngStream prng = root.child(kTagParams);
    const auto source = static_cast<NodeId>(uniform_int(prng, 0, static_cast<std::int64_t>(graph_.size()) - 1));
    RngStream srng = root.child(kTagSimulate);
    const Cascade full = simulate_ic(graph_, source, p_, max_steps_, srng);
    RngStream mrng = root.child(kTagObserve);
    const Cascade masked = mask_cascade(full, mask_fraction_, mrng, rounding_);

    std::size_t masked_count = 0;
    for (auto o : masked.observed) masked_count += o == 0;
    CorpusRecord rec;
    rec.id = id;
    rec.domain = Domain::Cascade;
    rec.params_json = json{{"source", source},
                           {"p", p_},
                           {"max_steps", max_steps_},
                           {"mask_fraction", mask_fraction_},
                           {"infected", full.infected_count()},
                           {"masked", masked_count},
                           {"source_masked", masked.source_masked()}}
                          .dump();
    rec.arrays.push_back(NamedArray::i32("infection_time", masked.infection_time));
    rec.arrays.push_back(NamedArray::i32("true_infection_time", full.infection_time));
    rec.arrays.push_back(NamedArray::u8("observed", masked.observed));
    const std::int32_t src[] = {static_cast<std::int32_t>(source)};
    rec.arrays.push_back(NamedArray::i32("source", src));
    return rec;
  }

  void finish(const std::filesystem::path& dir, CorpusManifest& manifest) const override {
    write_edge_list(graph_, dir / kGraphEdgesFile);
    const LapPE pe = laplacian_pe(graph_, lappe_k_);
    std::vector<std::int32_t> edges;
    for (NodeId u = 0; u < graph_.size(); ++u) {
      for (NodeId v : graph_.adjacency[u]) {
        if (u < v) {
          edges.push_back(static_cast<std::int32_t>(u));
          edges.push_back(static_cast<std::int32_t>(v));
        }
      }
    }
    CorpusRecord shared;
    shared.id = 0;
    shared.domain = Domain::Cascade;
    shared.params_json = json{{"model", graph_.meta.model}, {"nodes", graph_.size()}, {"m", graph_.meta.m},
                              {"edges", graph_.edge_count()}, {"lappe_k", pe.k}}
                             .dump();
    shared.arrays.push_back(NamedArray::i32("edges", edges, {edges.size() / 2, 2}));
    shared.arrays.push_back(NamedArray::f32("lappe", pe.vectors, {pe.n, pe.k}));
    shared.arrays.push_back(NamedArray::f64("lappe_eigenvalues", pe.eigenvalues));
    const std::string image = encode_shard(std::span<const CorpusRecord>(&shared, 1));
    atomic_write_file(dir / kSharedShardFile, image);
    manifest.extra["graph"] = {{"model", graph_.meta.model},
                               {"nodes", graph_.size()},
                               {"m", graph_.meta.m},
                               {"edges", graph_.edge_count()},
                               {"edge_list", kGraphEdgesFile},
                               {"edge_list_sha256", sha256_file_hex(dir / kGraphEdgesFile)},
                               {"shared_shard", kSharedShardFile},
                               {"shared_shard_sha256", sha256_hex(image)}};
  }

 private:
  NetGraph graph_;
  std::uint64_t seed_ = 0;
  double p_ = 0.05;
  int max_steps_ = 15;
  double mask_fraction_ = 0.2;
  MaskRounding rounding_ = MaskRounding::Stochastic;
  std::size_t lappe_k_ = 16;
};

}  // namespace

std::unique_ptr<RecordFactory> make_factory(Domain domain, const json& config, std::uint64_t seed,
                                            std::uint64_t count) {
  switch (domain) {
    case Domain::Epi: return std::make_unique<EpiFactory>(config, seed);
    case Domain::EcoButterfly: return std::make_unique<ButterflyFactory>(config, seed);
    case Domain::EcoLynxHare: return std::make_unique<LynxHareFactory>(config, seed);
    case Domain::Chem: return std::make_unique<ChemFactory>(config, seed, count);
    case Domain::Cascade: return std::make_unique<CascadeFactory>(config, seed);
  }
  throw ParameterError("unknown domain");
}

unsigned resolve_threads(std::optional<unsigned> cli) {
  if (cli) return std::max(1u, *cli);
  if (const char* env = std::getenv("SGNN_FORGE_THREADS"); env && *env) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ParameterError(std::string("SGNN_FORGE_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CorpusManifest generate_corpus(const GenerateRequest& req) {
  const auto factory = make_factory(req.domain, req.config, req.seed, req.count);
  const auto shard_size = req.config.at("generate").at("shard_size").get<std::size_t>();
  std::filesystem::create_directories(req.out);
  CorpusWriter writer(req.out, req.domain, shard_size);

  const unsigned threads = std::max(1u, req.threads);
  const std::uint64_t batch = std::max<std::uint64_t>(256, 64ULL * threads);
  std::vector<CorpusRecord> slots;
  for (std::uint64_t begin = 0; begin < req.count; begin += batch) {
    const std::uint64_t end = std::min(req.count, begin + batch);
    slots.assign(end - begin, CorpusRecord{});
    std::atomic<std::uint64_t> next{begin};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::mutex error_mu;
    auto work = [&] {
      for (std::uint64_t id; !failed && (id = next.fetch_add(1)) < end;) {
        try {
          slots[id - begin] = factory->make(id);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    };
    if (threads == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    for (const auto& r : slots) writer.add(r);
  }

  CorpusManifest manifest;
  manifest.domain = req.domain;
  manifest.master_seed = req.seed;
  manifest.config = req.config;
  manifest.config_digest = config_digest(req.config);
  manifest.created = utc_timestamp();
  factory->finish(req.out, manifest);
  return writer.finish(std::move(manifest));
}

CorpusRecord read_shared_record(const std::filesystem::path& corpus_dir) {
  ShardReader reader(corpus_dir / kSharedShardFile);
  CorpusRecord rec;
  if (!reader.next(rec)) throw FormatError("empty shared shard in " + corpus_dir.string());
  return rec;
}

}  // namespace forge
