// SPDX-License-Identifier: Apache-2.0
#include "gnce/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gnce/error.hpp"

namespace gnce {

GraphTopology build_graph(const GridConfig& config, std::uint32_t k_nearest) {
  validate(config);
  const auto pilots = pilot_positions(config);
  return build_graph(config.num_subcarriers(), config.num_symbols, pilots, k_nearest);
}

GraphTopology build_graph(std::uint32_t num_subcarriers, std::uint32_t num_symbols,
                          std::span<const GridPos> pilots, std::uint32_t k_nearest) {
  if (k_nearest == 0) throw ConfigError("build_graph: k_nearest must be at least 1");
  if (pilots.empty()) throw ConfigError("build_graph: the grid has no pilots");
  GraphTopology g;
  g.num_subcarriers = num_subcarriers;
  g.num_symbols = num_symbols;
  g.k_nearest = k_nearest;
  const std::size_t V = std::size_t{num_subcarriers} * num_symbols;
  g.node_to_grid.reserve(V);
  g.grid_to_node.resize(V);
  for (std::uint32_t m = 0; m < num_subcarriers; ++m) {
    for (std::uint32_t n = 0; n < num_symbols; ++n) {
      g.grid_to_node[std::size_t{m} * num_symbols + n] = static_cast<std::uint32_t>(g.node_to_grid.size());
      g.node_to_grid.push_back({m, n});
    }
  }
  for (auto p : pilots) {
    if (p.m >= num_subcarriers || p.n >= num_symbols) {
      throw ConfigError("build_graph: pilot outside the grid");
    }
    g.pilot_nodes.push_back(g.node_index(p.m, p.n));
  }
  std::sort(g.pilot_nodes.begin(), g.pilot_nodes.end());
  if (std::adjacent_find(g.pilot_nodes.begin(), g.pilot_nodes.end()) != g.pilot_nodes.end()) {
    throw ConfigError("build_graph: duplicate pilot position");
  }

  g.in_degree = static_cast<std::uint32_t>(std::min<std::size_t>(k_nearest, g.pilot_nodes.size()));
  g.edges.reserve(V * g.in_degree);

  // Squared distances are exact integers, so ordering and ties are exact.
  struct Candidate {
    std::int64_t d2;
    std::uint32_t node;
  };
  std::vector<Candidate> cand(g.pilot_nodes.size());
  auto closer = [](const Candidate& a, const Candidate& b) {
    return a.d2 != b.d2 ? a.d2 < b.d2 : a.node < b.node;
  };
  for (std::uint32_t i = 0; i < V; ++i) {
    const auto [mi, ni] = g.node_to_grid[i];
    for (std::size_t j = 0; j < g.pilot_nodes.size(); ++j) {
      const auto [mj, nj] = g.node_to_grid[g.pilot_nodes[j]];
      const std::int64_t dm = std::int64_t{mi} - mj;
      const std::int64_t dn = std::int64_t{ni} - nj;
      cand[j] = {dm * dm + dn * dn, g.pilot_nodes[j]};
    }
    std::partial_sort(cand.begin(), cand.begin() + g.in_degree, cand.end(), closer);
    for (std::uint32_t k = 0; k < g.in_degree; ++k) g.edges.push_back({cand[k].node, i});
  }
  return g;
}

double edge_distance(const GraphTopology& g, const Edge& e) {
  const auto a = g.node_to_grid[e.source];
  const auto b = g.node_to_grid[e.target];
  const double dm = static_cast<double>(a.m) - b.m;
  const double dn = static_cast<double>(a.n) - b.n;
  return std::sqrt(dm * dm + dn * dn);
}

NodeMatrix node_features_from_sample(std::span<const float> sample_input, const GraphTopology& g) {
  const std::size_t V = g.num_nodes();
  if (sample_input.size() != V * 2) {
    throw DataError("node features: sample has " + std::to_string(sample_input.size()) +
                    " values, topology expects " + std::to_string(V * 2));
  }
  NodeMatrix x(V, 2);
  for (std::size_t i = 0; i < V; ++i) {
    const auto p = g.node_to_grid[i];
    const std::size_t re = std::size_t{p.m} * g.num_symbols + p.n;
    x(i, 0) = sample_input[2 * re];
    x(i, 1) = sample_input[2 * re + 1];
  }
  return x;
}

std::vector<float> features_to_tensor(const NodeMatrix& features, const GraphTopology& g) {
  if (static_cast<std::size_t>(features.rows()) != g.num_nodes() || features.cols() != 2) {
    throw DataError("features_to_tensor: expected a V x 2 matrix");
  }
  std::vector<float> out(g.num_nodes() * 2);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto p = g.node_to_grid[i];
    const std::size_t re = std::size_t{p.m} * g.num_symbols + p.n;
    out[2 * re] = static_cast<float>(features(i, 0));
    out[2 * re + 1] = static_cast<float>(features(i, 1));
  }
  return out;
}

}  // namespace gnce
