#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "forge/cascade.hpp"
#include "forge/errors.hpp"

namespace forge {

std::size_t RumorRanking::rank_of(NodeId v) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == v) return i + 1;
  }
  return 0;
}

RumorRanking rumor_center(const NetGraph& g, const std::vector<NodeId>& infected) {
  if (infected.empty()) throw ParameterError("rumor_center: empty infected set");
  std::vector<NodeId> members(infected);
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  for (NodeId v : members) {
    if (v >= g.size()) throw ParameterError("rumor_center: node outside graph");
  }

  // Induced subgraph with local indices.
  std::unordered_map<NodeId, std::uint32_t> local;
  for (std::uint32_t i = 0; i < members.size(); ++i) local.emplace(members[i], i);
  std::vector<std::vector<std::uint32_t>> adj(members.size());
  for (std::uint32_t i = 0; i < members.size(); ++i) {
    for (NodeId w : g.adjacency[members[i]]) {
      if (auto it = local.find(w); it != local.end()) adj[i].push_back(it->second);
    }
  }

  // Largest component; the one holding the smallest id wins ties.
  std::vector<int> comp(members.size(), -1);
  std::vector<std::size_t> comp_size;
  for (std::uint32_t s = 0; s < members.size(); ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(comp_size.size());
    std::size_t count = 0;
    std::vector<std::uint32_t> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      ++count;
      for (auto w : adj[u]) {
        if (comp[w] < 0) {
          comp[w] = id;
          stack.push_back(w);
        }
      }
    }
    comp_size.push_back(count);
  }
  const auto best = static_cast<int>(std::max_element(comp_size.begin(), comp_size.end()) - comp_size.begin());
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t i = 0; i < members.size(); ++i) {
    if (comp[i] == best) nodes.push_back(i);
  }

  RumorRanking out;
  out.used_largest_component = comp_size.size() > 1;
  const std::size_t n = nodes.size();
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);

  std::vector<int> dist(members.size(), -1);
  std::vector<double> mass(members.size(), 0.0);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  std::vector<std::pair<double, NodeId>> scored;
  scored.reserve(n);
  for (std::uint32_t root : nodes) {
    order.clear();
    for (auto v : nodes) dist[v] = -1;
    dist[root] = 0;
    order.push_back(root);
    for (std::size_t head = 0; head < order.size(); ++head) {
      const auto u = order[head];
      for (auto w : adj[u]) {
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          order.push_back(w);
        }
      }
    }
    for (auto v : nodes) mass[v] = 1.0;
    double log_prod = 0.0;
    for (std::size_t i = order.size(); i-- > 0;) {
      const auto u = order[i];
      log_prod += std::log(mass[u]);
      if (u == root) continue;
      std::size_t parents = 0;
      for (auto w : adj[u]) parents += dist[w] == dist[u] - 1;
      const double share = mass[u] / static_cast<double>(parents);
      for (auto w : adj[u]) {
        if (dist[w] == dist[u] - 1) mass[w] += share;
      }
    }
    scored.emplace_back(log_n_fact - log_prod, members[root]);
  }

  auto key = [](double s) { return std::llround(s * 1e9); };
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    const auto ka = key(a.first), kb = key(b.first);
    if (ka != kb) return ka > kb;
    return a.second < b.second;
  });
  for (const auto& [s, v] : scored) {
    out.nodes.push_back(v);
    out.log_scores.push_back(s);
  }
  return out;
}

}  // namespace forge
