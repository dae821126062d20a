#include "forge/cascade.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include "forge/errors.hpp"

namespace forge {

std::size_t NetGraph::edge_count() const {
  std::size_t deg = 0;
  for (const auto& nb : adjacency) deg += nb.size();
  return deg / 2;
}

bool NetGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= size()) return false;
  return std::binary_search(adjacency[u].begin(), adjacency[u].end(), v);
}

NetGraph NetGraph::from_edges(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  NetGraph g;
  g.adjacency.resize(n);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw GraphError("edge endpoint out of range");
    if (u == v) throw GraphError("self-loop on node " + std::to_string(u));
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  for (auto& nb : g.adjacency) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

NetGraph generate_ba_graph(std::size_t n, std::size_t m, RngStream& rng) {
  if (m < 1) throw ParameterError("BA graph: m must be >= 1");
  if (n <= m) throw ParameterError("BA graph: n must exceed m");
  NetGraph g;
  g.adjacency.resize(n);
  g.meta = {"ba-clique-pa", static_cast<std::uint32_t>(m), rng.master_seed()};

  // Each edge endpoint appears once, so uniform draws are degree-weighted.
  std::vector<NodeId> endpoints;
  endpoints.reserve(2 * (m * (m - 1) / 2 + m * (n - m)));
  auto link = [&](NodeId u, NodeId v) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
    endpoints.push_back(u);
    endpoints.push_back(v);
  };
  for (NodeId u = 0; u < m; ++u) {
    for (NodeId v = u + 1; v < m; ++v) link(u, v);
  }

  std::vector<NodeId> targets;
  std::vector<char> chosen(n, 0);
  for (auto v = static_cast<NodeId>(m); v < n; ++v) {
    targets.clear();
    if (v == m) {
      for (NodeId u = 0; u < m; ++u) targets.push_back(u);
    } else {
      while (targets.size() < m) {
        NodeId u;
        if (endpoints.empty()) {
          u = static_cast<NodeId>(uniform_int(rng, 0, v - 1));
        } else {
          u = endpoints[static_cast<std::size_t>(
              uniform_int(rng, 0, static_cast<std::int64_t>(endpoints.size()) - 1))];
        }
        if (!chosen[u]) {
          chosen[u] = 1;
          targets.push_back(u);
        }
      }
      for (NodeId u : targets) chosen[u] = 0;
    }
    for (NodeId u : targets) link(v, u);
  }
  for (auto& nb : g.adjacency) std::sort(nb.begin(), nb.end());
  return g;
}

std::vector<int> bfs_distances(const NetGraph& g, NodeId source) {
  std::vector<int> dist(g.size(), -1);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId w : g.adjacency[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

std::size_t count_components(const NetGraph& g) {
  std::vector<char> seen(g.size(), 0);
  std::size_t components = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < g.size(); ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId w : g.adjacency[u]) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return components;
}

void write_edge_list(const NetGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list " + path.string());
  for (NodeId u = 0; u < g.size(); ++u) {
    for (NodeId v : g.adjacency[u]) {
      if (u < v) out << u << ' ' << v << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

NetGraph read_edge_list(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long u = -1, v = -1;
    if (!(ls >> u >> v) || u < 0 || v < 0) {
      throw FormatError("edge list line " + std::to_string(lineno) + ": expected two node ids");
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    n = std::max<std::size_t>(n, static_cast<std::size_t>(std::max(u, v)) + 1);
  }
  return NetGraph::from_edges(n, edges);
}

// --- cascades ---------------------------------------------------------------

std::size_t Cascade::infected_count() const {
  std::size_t c = 0;
  for (std::size_t v = 0; v < infection_time.size(); ++v) {
    if (infection_time[v] >= 0 || !observed[v]) ++c;
  }
  return c;
}

std::vector<NodeId> Cascade::visible_infected() const {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < infection_time.size(); ++v) {
    if (infection_time[v] >= 0) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

Cascade simulate_ic(const NetGraph& g, NodeId source, double p, int max_steps, RngStream& rng) {
  if (source >= g.size()) throw ParameterError("simulate_ic: source not in graph");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("simulate_ic: p must be in [0, 1]");
  if (max_steps < 0) throw ParameterError("simulate_ic: max_steps must be >= 0");
  Cascade c;
  c.source = source;
  c.p = p;
  c.max_steps = max_steps;
  c.infection_time.assign(g.size(), kNotInfected);
  c.observed.assign(g.size(), 1);
  c.infection_time[source] = 0;

  std::vector<NodeId> frontier{source}, next;
  for (int t = 0; t < max_steps && !frontier.empty(); ++t) {
    next.clear();
    for (NodeId u : frontier) {
      for (NodeId w : g.adjacency[u]) {
        if (c.infection_time[w] != kNotInfected) continue;
        if (bernoulli(rng, p)) {
          c.infection_time[w] = t + 1;
          next.push_back(w);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
  return c;
}

Cascade mask_cascade(const Cascade& c, double frac, RngStream& rng, MaskRounding rounding) {
  if (!(frac >= 0.0 && frac <= 1.0)) throw ParameterError("mask_cascade: frac must be in [0, 1]");
  Cascade out = c;
  std::vector<NodeId> infected = c.visible_infected();
  const double target = frac * static_cast<double>(infected.size());
  auto count = static_cast<std::size_t>(std::floor(target));
  if (rounding == MaskRounding::Stochastic && bernoulli(rng, target - static_cast<double>(count))) ++count;
  count = std::min(count, infected.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(infected.size()) - 1));
    std::swap(infected[i], infected[j]);
    out.infection_time[infected[i]] = kNotInfected;
    out.observed[infected[i]] = 0;
  }
  return out;
}

// --- positional encodings ---------------------------------------------------

LapPE laplacian_pe(const NetGraph& g, std::size_t k) {
  const std::size_t n = g.size();
  if (k == 0 || k >= n) throw ParameterError("laplacian_pe: k must be in [1, n)");
  const std::size_t comps = count_components(g);
  if (comps != 1) {
    throw GraphError("laplacian_pe: graph has " + std::to_string(comps) +
                     " connected components; the Laplacian null space has multiplicity " +
                     std::to_string(comps));
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (NodeId u = 0; u < n; ++u) {
    L(u, u) = static_cast<double>(g.degree(u));
    for (NodeId v : g.adjacency[u]) L(u, v) = -1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(L);
  if (solver.info() != Eigen::Success) throw GraphError("laplacian_pe: eigensolver did not converge");

  LapPE pe;
  pe.n = n;
  pe.k = k;
  pe.vectors.assign(n * k, 0.0);
  pe.eigenvalues.resize(k);
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  // Column 0 is the constant vector of the connected graph.
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(j + 1);
    pe.eigenvalues[j] = vals(col);
    double sign = 1.0;
    for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
      if (std::abs(vecs(i, col)) > 1e-12) {
        sign = vecs(i, col) < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) pe.vectors[i * k + j] = sign * vecs(static_cast<Eigen::Index>(i), col);
  }
  return pe;
}

}  // namespace forge
