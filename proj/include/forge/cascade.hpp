#pragma once

// Diffusion cascades on preferential-attachment graphs: BA construction,
// Independent Cascade spreading, infected-node masking, Laplacian positional
// encodings and the rumor-centrality source estimator.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forge/stochastics.hpp"

namespace forge {

using NodeId = std::uint32_t;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GraphMetadata {
  std::string model = "explicit";  // "ba-clique-pa" for generate_ba_graph
  std::uint32_t m = 0;
  std::uint64_t seed = 0;
};

struct NetGraph {
  std::vector<std::vector<NodeId>> adjacency;  // sorted, no self-loops
  GraphMetadata meta;

  std::size_t size() const { return adjacency.size(); }
  std::size_t edge_count() const;
  std::size_t degree(NodeId v) const { return adjacency[v].size(); }
  bool has_edge(NodeId u, NodeId v) const;

  // Throws GraphError on self-loops or out-of-range endpoints; duplicates merge.
  static NetGraph from_edges(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges);
};

// Clique on the first m nodes; each later node attaches to m distinct
// existing nodes chosen with probability proportional to degree.
// Edge count: m(m-1)/2 + m(n-m).
NetGraph generate_ba_graph(std::size_t n, std::size_t m, RngStream& rng);

std::size_t count_components(const NetGraph& g);
std::vector<int> bfs_distances(const NetGraph& g, NodeId source);

// One "u v" line per edge with u < v, ascending.
void write_edge_list(const NetGraph& g, const std::filesystem::path& path);
NetGraph read_edge_list(const std::filesystem::path& path, std::size_t n = 0);

inline constexpr std::int32_t kNotInfected = -1;

struct Cascade {
  NodeId source = 0;
  std::vector<std::int32_t> infection_time;  // -1 never infected or masked
  std::vector<std::uint8_t> observed;        // 0 for masked nodes
  double p = 0.0;
  int max_steps = 15;

  std::size_t infected_count() const;    // including masked nodes
  std::vector<NodeId> visible_infected() const;
  bool source_masked() const { return !observed[source]; }
};

Cascade simulate_ic(const NetGraph& g, NodeId source, double p, int max_steps, RngStream& rng);

enum class MaskRounding { Stochastic, Floor };

// Masks round(frac * infected) nodes, the source included in the draw.
// Stochastic rounding adds one with probability equal to the fractional part,
// so a node is masked with probability exactly frac on every cascade size.
Cascade mask_cascade(const Cascade& c, double frac, RngStream& rng,
                     MaskRounding rounding = MaskRounding::Stochastic);

struct LapPE {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> vectors;      // n x k row-major
  std::vector<double> eigenvalues;  // ascending, length k

  double at(std::size_t node, std::size_t col) const { return vectors[node * k + col]; }
};

// Eigenvectors of L = D - A for the k smallest nonzero eigenvalues; each
// column's first entry above 1e-12 in magnitude is positive.
LapPE laplacian_pe(const NetGraph& g, std::size_t k = 16);

struct RumorRanking {
  std::vector<NodeId> nodes;       // best first
  std::vector<double> log_scores;  // aligned with nodes
  bool used_largest_component = false;

  // 1-based rank of v, 0 if absent.
  std::size_t rank_of(NodeId v) const;
};

// Rumor centrality log R(v) = log n! - sum_u log T_u over a BFS layering of
// the infected subgraph rooted at each candidate. A node with several parents
// in the previous layer splits its subtree mass equally among them, which
// keeps scores independent of node labels and exact on trees. Scores equal
// within 1e-9 are ordered by node id.
RumorRanking rumor_center(const NetGraph& g, const std::vector<NodeId>& infected);

}  // namespace forge
