#include <algorithm>
#include <array>
#include <cmath>

#include "forge/chem.hpp"

namespace forge {
namespace {

struct Level {
  const char* name;
  double effect;
};

constexpr std::array<Level, 5> kAryl{{{"6-chloroquinoline", -0.14},
                                      {"6-bromoquinoline", 0.04},
                                      {"6-iodoquinoline", 0.08},
                                      {"6-quinolinyl triflate", 0.02},
                                      {"2-chloro-6-methylquinoline", -0.06}}};
constexpr std::array<Level, 3> kBoronate{{{"6-quinolineboronic acid", 0.05},
                                          {"6-quinolineboronic acid pinacol ester", 0.02},
                                          {"6-quinoline-BF3K", -0.07}}};
constexpr std::array<Level, 12> kLigand{{{"P(tBu)3", 0.10},
                                         {"PPh3", -0.14},
                                         {"AmPhos", 0.08},
                                         {"P(Cy)3", 0.04},
                                         {"P(o-Tol)3", -0.08},
                                         {"CataCXium A", 0.09},
                                         {"SPhos", 0.12},
                                         {"dtbpf", 0.03},
                                         {"XPhos", 0.13},
                                         {"dppf", -0.02},
                                         {"Xantphos", -0.05},
                                         {"None", -0.30}}};
constexpr std::array<Level, 8> kBase{{{"NaOH", 0.03},
                                      {"NaHCO3", -0.04},
                                      {"CsF", 0.06},
                                      {"K3PO4", 0.08},
                                      {"KOH", 0.02},
                                      {"LiOtBu", -0.05},
                                      {"Et3N", -0.10},
                                      {"NaOtBu", 0.00}}};
constexpr std::array<Level, 4> kSolvent{{{"MeCN", -0.03}, {"THF", 0.04}, {"DMF", 0.02}, {"MeOH", -0.03}}};

// Planted interactions, bounded so the marginals stay near the main effects.
double interaction(std::size_t a, std::size_t b, std::size_t l, std::size_t s, std::size_t v) {
  double d = 0.0;
  d += 0.05 * std::sin(1.7 * static_cast<double>(a + 1) * static_cast<double>(l + 2));
  d += 0.04 * std::cos(2.3 * static_cast<double>(b + 1) * static_cast<double>(s + 1));
  d += 0.03 * std::sin(0.9 * static_cast<double>(l + 1) * static_cast<double>(s + 3));
  d += 0.03 * std::cos(1.3 * static_cast<double>(a + 2) * static_cast<double>(l + 1) * static_cast<double>(v + 1));
  return d;
}

}  // namespace

ChemDataset generate_standin_reactions(std::uint64_t seed) {
  RngStream rng(seed, 0x57A4D1);
  ChemDataset data;
  data.rows.reserve(kAryl.size() * kBoronate.size() * kLigand.size() * kBase.size() * kSolvent.size());
  for (std::size_t a = 0; a < kAryl.size(); ++a) {
    for (std::size_t b = 0; b < kBoronate.size(); ++b) {
      for (std::size_t l = 0; l < kLigand.size(); ++l) {
        for (std::size_t s = 0; s < kBase.size(); ++s) {
          for (std::size_t v = 0; v < kSolvent.size(); ++v) {
            const double mean = 0.68 + kAryl[a].effect + kBoronate[b].effect + kLigand[l].effect +
                                kBase[s].effect + kSolvent[v].effect + interaction(a, b, l, s, v);
            const double m = std::clamp(mean, 0.02, 0.98);
            const double sd = 0.05 + 0.25 * m * (1.0 - m);
            double p_fail = 0.035;
            if (l == 11 || l == 1) p_fail += 0.06;
            if ((s == 7 || s == 5) && (l == 1 || l == 11)) p_fail += 0.10;
            if (b == 2 && s == 6) p_fail += 0.10;
            if (a == 0 && (l == 1 || l == 11)) p_fail += 0.08;
            double y;
            if (bernoulli(rng, p_fail)) {
              y = uniform(rng, 0.0, 0.04);
            } else {
              y = std::clamp(normal(rng, m, sd), 0.0, 1.0);
            }
            ChemRow row;
            row.tuple.parts = {kAryl[a].name, kBoronate[b].name, kLigand[l].name, kBase[s].name,
                               kSolvent[v].name};
            row.yield = y;
            data.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return data;
}

}  // namespace forge
