// SPDX-License-Identifier: Apache-2.0
//
// Resource-element graph: one node per RE, edges from each node's nearest
// DM-RS nodes (Euclidean distance on the subcarrier/symbol lattice).
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gnce/grid.hpp"

namespace gnce {

/// Node-major dense matrix (one row per node).
using NodeMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Edge {
  std::uint32_t source = 0;  // pilot node
  std::uint32_t target = 0;

  bool operator==(const Edge&) const = default;
};

struct GraphTopology {
  std::uint32_t num_subcarriers = 0;
  std::uint32_t num_symbols = 0;
  std::uint32_t k_nearest = 3;
  std::uint32_t in_degree = 0;  // min(k_nearest, #pilots), the same for every node
  std::vector<GridPos> node_to_grid;
  std::vector<std::uint32_t> grid_to_node;  // indexed by m * N + n
  std::vector<std::uint32_t> pilot_nodes;
  /// Grouped by target in node order; within a target, nearest first.
  std::vector<Edge> edges;

  std::size_t num_nodes() const { return node_to_grid.size(); }
  std::uint32_t node_index(std::uint32_t m, std::uint32_t n) const {
    return grid_to_node[std::size_t{m} * num_symbols + n];
  }
  std::span<const Edge> incoming(std::uint32_t node) const {
    return std::span(edges).subspan(std::size_t{node} * in_degree, in_degree);
  }

  bool operator==(const GraphTopology&) const = default;
};

/// Ties in distance go to the lower pilot node index.
GraphTopology build_graph(const GridConfig& config, std::uint32_t k_nearest = 3);
GraphTopology build_graph(std::uint32_t num_subcarriers, std::uint32_t num_symbols,
                          std::span<const GridPos> pilots, std::uint32_t k_nearest = 3);

double edge_distance(const GraphTopology& g, const Edge& e);

/// V x 2 features (re, im) from an M*N*2 sample tensor.
NodeMatrix node_features_from_sample(std::span<const float> sample_input, const GraphTopology& g);
/// Inverse of node_features_from_sample.
std::vector<float> features_to_tensor(const NodeMatrix& features, const GraphTopology& g);

}  // namespace gnce
