#include "forge/chem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "forge/errors.hpp"

namespace forge {
namespace {

constexpr double kYieldFloor = 0.001;
constexpr double kYieldCeiling = 0.999;
constexpr double kFailLow = 0.001;
constexpr double kFailHigh = 0.04;

std::size_t idx(Component c) { return static_cast<std::size_t>(c); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

double term_sum(const EncodedTuple& t, const std::vector<InteractionTable>& tables) {
  double s = 0.0;
  for (const auto& tab : tables) s += tab.lookup(t);
  return s;
}

double main_sum(const EncodedTuple& t, const MainEffects& m) {
  double s = m.global_mean;
  for (std::size_t c = 0; c < kComponents; ++c) s += m.effect[c][t[c]];
  return s;
}

InteractionTable fit_table(const std::vector<EncodedReaction>& data, const std::vector<double>& resid,
                           const std::vector<Component>& comps, std::size_t min_support) {
  InteractionTable tab;
  tab.components = comps;
  std::map<std::vector<std::uint32_t>, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& a = acc[tab.key(data[i].codes)];
    a.first += resid[i];
    a.second += 1;
  }
  for (const auto& [k, a] : acc) {
    if (a.second < min_support) continue;
    tab.delta[k] = a.first / static_cast<double>(a.second);
    tab.support[k] = a.second;
  }
  return tab;
}

}  // namespace

Component component_from_name(std::string_view name) {
  for (std::size_t c = 0; c < kComponents; ++c) {
    if (kComponentNames[c] == name) return static_cast<Component>(c);
  }
  throw VocabularyError("unknown reaction component '" + std::string(name) + "'");
}

std::string_view stratum_name(Stratum s) {
  switch (s) {
    case Stratum::Empirical: return "empirical";
    case Stratum::Memorized: return "memorized";
    case Stratum::Partial: return "partial";
    case Stratum::Uniform: return "uniform";
  }
  return "unknown";
}

// --- vocabulary -------------------------------------------------------------

std::uint32_t Vocabulary::intern(Component c, const std::string& name) {
  auto& ix = index_[idx(c)];
  if (auto it = ix.find(name); it != ix.end()) return it->second;
  const auto code = static_cast<std::uint32_t>(names_[idx(c)].size());
  names_[idx(c)].push_back(name);
  ix.emplace(name, code);
  return code;
}

std::uint32_t Vocabulary::code(Component c, const std::string& name) const {
  const auto& ix = index_[idx(c)];
  auto it = ix.find(name);
  if (it == ix.end()) {
    throw VocabularyError("'" + name + "' is not a known " + std::string(kComponentNames[idx(c)]));
  }
  return it->second;
}

const std::string& Vocabulary::name(Component c, std::uint32_t code) const {
  const auto& v = names_[idx(c)];
  if (code >= v.size()) throw VocabularyError("code out of range for " + std::string(kComponentNames[idx(c)]));
  return v[code];
}

bool Vocabulary::contains(Component c, const std::string& name) const {
  return index_[idx(c)].count(name) > 0;
}

EncodedTuple Vocabulary::encode(const ReactionTuple& t) const {
  EncodedTuple e{};
  for (std::size_t c = 0; c < kComponents; ++c) e[c] = code(static_cast<Component>(c), t.parts[c]);
  return e;
}

ReactionTuple Vocabulary::decode(const EncodedTuple& t) const {
  ReactionTuple r;
  for (std::size_t c = 0; c < kComponents; ++c) r.parts[c] = name(static_cast<Component>(c), t[c]);
  return r;
}

// --- csv --------------------------------------------------------------------

ChemDataset read_reactions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reactions CSV " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("reactions CSV is empty: " + path.string());
  const auto header = split_csv_line(line);
  std::array<std::size_t, kComponents> col{};
  std::size_t yield_col = header.size();
  std::array<bool, kComponents> seen{};
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = trim(header[i]);
    if (h == "yield") {
      yield_col = i;
      continue;
    }
    for (std::size_t c = 0; c < kComponents; ++c) {
      if (h == kComponentNames[c]) {
        col[c] = i;
        seen[c] = true;
      }
    }
  }
  for (std::size_t c = 0; c < kComponents; ++c) {
    if (!seen[c]) throw FormatError("reactions CSV lacks column " + std::string(kComponentNames[c]));
  }
  if (yield_col == header.size()) throw FormatError("reactions CSV lacks column yield");

  ChemDataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < header.size()) {
      throw FormatError("reactions CSV line " + std::to_string(lineno) + " has too few fields");
    }
    const std::string ys = trim(f[yield_col]);
    if (ys.empty()) continue;
    double y = 0.0;
    try {
      std::size_t used = 0;
      y = std::stod(ys, &used);
      if (used != ys.size()) continue;
    } catch (const std::exception&) {
      continue;
    }
    if (!std::isfinite(y)) continue;
    if (y > 1.0 && y <= 100.0) y /= 100.0;  // percent yields
    if (y < 0.0 || y > 1.0) {
      throw FormatError("reactions CSV line " + std::to_string(lineno) + ": yield outside [0, 1]");
    }
    ChemRow row;
    for (std::size_t c = 0; c < kComponents; ++c) {
      row.tuple.parts[c] = trim(f[col[c]]);
      if (row.tuple.parts[c].empty()) {
        throw FormatError("reactions CSV line " + std::to_string(lineno) + ": missing " +
                          std::string(kComponentNames[c]));
      }
    }
    row.yield = y;
    data.rows.push_back(std::move(row));
  }
  return data;
}

void write_reactions_csv(const ChemDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "aryl_halide,boronate,ligand,base,solvent,yield\n";
  out.precision(17);
  for (const auto& r : data.rows) {
    for (const auto& p : r.tuple.parts) out << csv_field(p) << ',';
    out << r.yield << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<ChemDataset, ChemDataset> split_dataset(const ChemDataset& data, double fraction,
                                                  RngStream& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("split fraction must be in (0, 1]");
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  std::pair<ChemDataset, ChemDataset> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? out.first : out.second).rows.push_back(data.rows[order[i]]);
  }
  return out;
}

std::vector<EncodedReaction> encode_dataset(const ChemDataset& data, Vocabulary& vocab) {
  std::vector<EncodedReaction> out;
  out.reserve(data.rows.size());
  for (const auto& r : data.rows) {
    EncodedReaction e;
    for (std::size_t c = 0; c < kComponents; ++c) e.codes[c] = vocab.intern(static_cast<Component>(c), r.tuple.parts[c]);
    e.yield = r.yield;
    out.push_back(e);
  }
  return out;
}

// --- structured effects -----------------------------------------------------

MainEffects fit_effects(const std::vector<EncodedReaction>& data, const Vocabulary& vocab) {
  if (data.empty()) throw FitError("fit_effects: empty dataset");
  MainEffects m;
  double total = 0.0;
  for (const auto& r : data) total += r.yield;
  m.global_mean = total / static_cast<double>(data.size());
  for (std::size_t c = 0; c < kComponents; ++c) {
    const std::size_t n = vocab.size(static_cast<Component>(c));
    std::vector<double> sum(n, 0.0);
    m.count[c].assign(n, 0);
    for (const auto& r : data) {
      sum[r.codes[c]] += r.yield;
      m.count[c][r.codes[c]] += 1;
    }
    m.effect[c].assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (m.count[c][v] > 0) m.effect[c][v] = sum[v] / static_cast<double>(m.count[c][v]) - m.global_mean;
    }
  }
  return m;
}

std::vector<std::uint32_t> InteractionTable::key(const EncodedTuple& t) const {
  std::vector<std::uint32_t> k;
  k.reserve(components.size());
  for (Component c : components) k.push_back(t[idx(c)]);
  return k;
}

double InteractionTable::lookup(const EncodedTuple& t) const {
  if (delta.empty()) return 0.0;
  auto it = delta.find(key(t));
  return it == delta.end() ? 0.0 : it->second;
}

void fit_interactions(const std::vector<EncodedReaction>& data, std::size_t min_support,
                      ChemYieldModel& model, const ChemFitOptions& options) {
  if (min_support < 1) throw ParameterError("fit_interactions: min_support must be >= 1");
  for (const auto& spec : options.pairs) {
    if (spec.size() != 2) throw ParameterError("fit_interactions: pair terms need two components");
  }
  for (const auto& spec : options.threeways) {
    if (spec.size() != 3) throw ParameterError("fit_interactions: three-way terms need three components");
  }
  std::vector<double> resid(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) resid[i] = data[i].yield - main_sum(data[i].codes, model.main);

  model.pairs.clear();
  for (const auto& spec : options.pairs) model.pairs.push_back(fit_table(data, resid, spec, min_support));

  for (std::size_t i = 0; i < data.size(); ++i) resid[i] -= term_sum(data[i].codes, model.pairs);
  model.threeways.clear();
  for (const auto& spec : options.threeways) {
    model.threeways.push_back(fit_table(data, resid, spec, min_support));
  }
}

double structured_prediction(const EncodedTuple& t, const ChemYieldModel& m) {
  const double y = main_sum(t, m.main) + term_sum(t, m.pairs) + term_sum(t, m.threeways);
  return std::clamp(y, 0.0, 1.0);
}

double predict_base_yield(const EncodedTuple& t, const ChemYieldModel& m) {
  if (auto it = m.memorized.find(t); it != m.memorized.end()) return it->second.mean;
  return structured_prediction(t, m);
}

double predict_base_yield(const ReactionTuple& t, const ChemYieldModel& m) {
  return predict_base_yield(m.vocab.encode(t), m);
}

// --- failures ---------------------------------------------------------------

FailureConfig FailureConfig::defaults() {
  FailureConfig f;
  f.heuristics = {
      {"strong_base_weak_ligand", 0.35,
       {{Component::Base, {"NaOtBu", "LiOtBu"}}, {Component::Ligand, {"PPh3", "None"}}}},
      {"bf3k_weak_base", 0.30,
       {{Component::Boronate, {"6-quinoline-BF3K"}}, {Component::Base, {"Et3N"}}}},
      {"aryl_chloride_low_activity_ligand", 0.25,
       {{Component::ArylHalide, {"6-chloroquinoline"}}, {Component::Ligand, {"PPh3", "None"}}}},
  };
  return f;
}

void fit_failure_model(const std::vector<EncodedReaction>& data, ChemYieldModel& m) {
  for (std::size_t c = 0; c < kComponents; ++c) {
    const std::size_t n = m.vocab.size(static_cast<Component>(c));
    std::vector<double> fails(n, 0.0), count(n, 0.0);
    for (const auto& r : data) {
      count[r.codes[c]] += 1.0;
      if (r.yield < m.failure.threshold) fails[r.codes[c]] += 1.0;
    }
    m.component_failure_rate[c].assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (count[v] > 0) m.component_failure_rate[c][v] = fails[v] / count[v];
    }
  }
  m.heuristic_masks.clear();
  for (const auto& h : m.failure.heuristics) {
    std::array<std::vector<char>, kComponents> mask;
    for (std::size_t c = 0; c < kComponents; ++c) mask[c].assign(m.vocab.size(static_cast<Component>(c)), 1);
    for (const auto& [comp, members] : h.conditions) {
      auto& mk = mask[idx(comp)];
      for (std::uint32_t v = 0; v < mk.size(); ++v) {
        mk[v] = mk[v] && members.count(m.vocab.name(comp, v)) > 0;
      }
    }
    m.heuristic_masks.push_back(std::move(mask));
  }
}

double failure_probability(const EncodedTuple& t, const ChemYieldModel& m) {
  double rate = 0.0;
  for (std::size_t c = 0; c < kComponents; ++c) {
    const auto& r = m.component_failure_rate[c];
    if (t[c] < r.size()) rate += r[t[c]];
  }
  double p = m.failure.empirical_weight * rate / static_cast<double>(kComponents);
  for (std::size_t h = 0; h < m.heuristic_masks.size(); ++h) {
    bool hit = true;
    for (std::size_t c = 0; c < kComponents && hit; ++c) {
      const auto& mk = m.heuristic_masks[h][c];
      hit = t[c] < mk.size() && mk[t[c]];
    }
    if (hit) p += m.failure.heuristics[h].boost;
  }
  return std::clamp(p, 0.0, m.failure.ceiling);
}

double failure_probability(const ReactionTuple& t, const ChemYieldModel& m) {
  return failure_probability(m.vocab.encode(t), m);
}

// --- heteroscedastic noise --------------------------------------------------

std::vector<VarianceBin> fit_variance_bins(const std::vector<EncodedReaction>& data,
                                           const ChemYieldModel& m, std::size_t bins) {
  if (bins == 0) throw ParameterError("fit_variance_bins: need at least one bin");
  if (data.size() < bins) {
    throw FitError("fit_variance_bins: " + std::to_string(data.size()) + " rows for " +
                   std::to_string(bins) + " bins");
  }
  std::vector<std::pair<double, double>> pr;  // (prediction, residual)
  pr.reserve(data.size());
  for (const auto& r : data) {
    const double yhat = structured_prediction(r.codes, m);
    pr.emplace_back(yhat, r.yield - yhat);
  }
  std::stable_sort(pr.begin(), pr.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<VarianceBin> out(bins);
  const std::size_t n = pr.size();
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * n / bins;
    const std::size_t hi = (b + 1) * n / bins;
    VarianceBin& bin = out[b];
    bin.count = hi - lo;
    double center = 0.0, ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      center += pr[i].first;
      ss += pr[i].second * pr[i].second;
    }
    bin.center = center / static_cast<double>(bin.count);
    bin.variance = ss / static_cast<double>(bin.count);
    bin.lower = b == 0 ? 0.0 : out[b - 1].upper;
    bin.upper = b + 1 == bins ? 1.0 : 0.5 * (pr[hi - 1].first + pr[hi].first);
  }
  return out;
}

double noise_variance(double predicted, const ChemYieldModel& m) {
  const auto& bins = m.variance_bins;
  if (bins.empty()) return 0.0;
  std::size_t best = 0;
  double dist = std::abs(predicted - bins[0].center);
  for (std::size_t b = 1; b < bins.size(); ++b) {
    const double d = std::abs(predicted - bins[b].center);
    if (d < dist) {
      dist = d;
      best = b;
    }
  }
  return bins[best].variance;
}

// --- pipeline ---------------------------------------------------------------

ChemYieldModel fit_chem_model(const ChemDataset& data, const ChemFitOptions& options) {
  if (data.rows.empty()) throw FitError("fit_chem_model: empty dataset");
  ChemYieldModel m;
  m.failure = options.failure;

  // Full vocabulary from every row, so held-out values stay addressable.
  encode_dataset(data, m.vocab);

  RngStream split_rng(options.split_seed, 0);
  const auto [analysis, held_out] = split_dataset(data, options.analysis_fraction, split_rng);
  (void)held_out;
  const auto enc = encode_dataset(analysis, m.vocab);

  m.main = fit_effects(enc, m.vocab);
  fit_interactions(enc, options.min_support, m, options);

  std::map<EncodedTuple, std::pair<double, double>> sums;
  for (const auto& r : enc) {
    auto& s = sums[r.codes];
    s.first += r.yield;
    s.second += r.yield * r.yield;
    m.memorized[r.codes].count += 1;
  }
  for (auto& [k, st] : m.memorized) {
    const double n = static_cast<double>(st.count);
    st.mean = sums[k].first / n;
    st.variance = std::max(0.0, sums[k].second / n - st.mean * st.mean);
  }

  fit_failure_model(enc, m);

  std::vector<EncodedReaction> ok;
  for (const auto& r : enc) {
    if (r.yield >= m.failure.threshold) ok.push_back(r);
  }
  m.variance_bins = fit_variance_bins(ok, m, options.variance_bins);

  double mean = 0.0, sq = 0.0;
  for (const auto& r : data.rows) mean += r.yield;
  mean /= static_cast<double>(data.rows.size());
  for (const auto& r : data.rows) sq += (r.yield - mean) * (r.yield - mean);
  const double sd = std::sqrt(sq / static_cast<double>(data.rows.size()));
  m.target_mean = options.target_mean >= 0.0 ? options.target_mean : mean;
  m.target_std = options.target_std >= 0.0 ? options.target_std : sd;
  return m;
}

double sample_reaction_yield(const EncodedTuple& t, const ChemYieldModel& m, RngStream& rng) {
  if (bernoulli(rng, failure_probability(t, m))) return uniform(rng, kFailLow, kFailHigh);
  const double yhat = predict_base_yield(t, m);
  const double var = noise_variance(yhat, m);
  const double y = var > 0.0 ? normal(rng, yhat, std::sqrt(var)) : yhat;
  return std::clamp(y, kYieldFloor, kYieldCeiling);
}

std::vector<double> calibrate(const std::vector<double>& raw, double target_mean, double target_std) {
  if (raw.empty()) return {};
  const double n = static_cast<double>(raw.size());
  const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : raw) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = sd > 0.0 ? (raw[i] - mean) / sd * target_std + target_mean : target_mean;
  }
  return out;
}

ChemCorpus generate_chem_corpus(const ChemYieldModel& m, std::size_t n, const RngStream& rng,
                                const ChemStrata& strata) {
  const double total = strata.memorized + strata.partial + strata.uniform;
  if (!(total > 0.0) || strata.memorized < 0 || strata.partial < 0 || strata.uniform < 0) {
    throw ParameterError("chem strata fractions must be >= 0 with a positive sum");
  }
  if (m.memorized.empty()) throw FitError("generate_chem_corpus: model has no memorized tuples");

  std::vector<EncodedTuple> observed;
  std::vector<double> means;
  for (const auto& [k, st] : m.memorized) {
    observed.push_back(k);
    means.push_back(st.mean);
  }
  std::vector<double> sorted = means;
  std::sort(sorted.begin(), sorted.end());
  const double cut = sorted[static_cast<std::size_t>(
      std::floor(strata.high_yield_quantile * static_cast<double>(sorted.size() - 1)))];
  std::vector<EncodedTuple> high;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (means[i] > cut) high.push_back(observed[i]);
  }
  if (high.empty()) high = observed;

  const std::array<std::size_t, kComponents> sizes{
      m.vocab.size(Component::ArylHalide), m.vocab.size(Component::Boronate),
      m.vocab.size(Component::Ligand), m.vocab.size(Component::Base), m.vocab.size(Component::Solvent)};
  auto pick = [](RngStream& r, std::size_t size) {
    return static_cast<std::size_t>(uniform_int(r, 0, static_cast<std::int64_t>(size) - 1));
  };

  ChemCorpus out;
  out.codes.resize(n);
  out.raw.resize(n);
  out.data.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream r = rng.child(i);
    const double u = uniform(r, 0.0, total);
    EncodedTuple t{};
    Stratum s;
    if (u < strata.memorized) {
      s = Stratum::Memorized;
      t = observed[pick(r, observed.size())];
    } else if (u < strata.memorized + strata.partial) {
      s = Stratum::Partial;
      t = high[pick(r, high.size())];
      const std::size_t c = bernoulli(r, 0.5) ? idx(Component::Base) : idx(Component::Solvent);
      if (sizes[c] > 1) {
        auto v = static_cast<std::uint32_t>(pick(r, sizes[c] - 1));
        if (v >= t[c]) ++v;
        t[c] = v;
      }
    } else {
      s = Stratum::Uniform;
      for (std::size_t c = 0; c < kComponents; ++c) t[c] = static_cast<std::uint32_t>(pick(r, sizes[c]));
    }
    out.codes[i] = t;
    out.raw[i] = sample_reaction_yield(t, m, r);
    out.data.rows[i].stratum = s;
  }

  out.calibrated = calibrate(out.raw, m.target_mean, m.target_std);
  for (std::size_t i = 0; i < n; ++i) {
    out.data.rows[i].tuple = m.vocab.decode(out.codes[i]);
    out.data.rows[i].yield = std::clamp(out.calibrated[i], kYieldFloor, kYieldCeiling);
  }
  return out;
}

}  // namespace forge
