// SPDX-License-Identifier: Apache-2.0
//
// Test helpers: random small graphs and a loop-based reference forward pass
// written independently of the Eigen implementation.
#pragma once

#include <vector>

#include "gnce/gnn.hpp"
#include "gnce/graph.hpp"
#include "gnce/rng.hpp"

namespace gnce::testing {

/// A rows x cols grid with 1..max_pilots distinct random pilots and k in 1..3.
inline GraphTopology random_graph(Rng& rng, std::uint32_t rows, std::uint32_t cols,
                                  std::uint32_t max_pilots = 4) {
  const std::uint32_t V = rows * cols;
  const auto count = 1 + rng.uniform_index(max_pilots);
  std::vector<std::uint32_t> cells(V);
  for (std::uint32_t i = 0; i < V; ++i) cells[i] = i;
  std::vector<GridPos> pilots;
  for (std::size_t j = 0; j < count; ++j) {
    const auto pick = j + rng.uniform_index(V - j);
    std::swap(cells[j], cells[pick]);
    pilots.push_back({cells[j] / cols, cells[j] % cols});
  }
  const auto k = static_cast<std::uint32_t>(1 + rng.uniform_index(3));
  return build_graph(rows, cols, pilots, k);
}

inline NodeMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  NodeMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  return m;
}

using Rows = std::vector<std::vector<double>>;

inline Rows naive_layer(const SageLayer& l, const Rows& x, const GraphTopology& g, bool tied,
                        Aggregation mode, bool relu) {
  const auto out_dim = static_cast<std::size_t>(l.weight.rows());
  const auto in_dim = x[0].size();
  Rows z(x.size(), std::vector<double>(out_dim, 0.0));
  for (std::uint32_t i = 0; i < x.size(); ++i) {
    std::vector<double> agg(in_dim, 0.0);
    std::size_t deg = 0;
    for (const Edge& e : g.edges)
      if (e.target == i) {
        for (std::size_t f = 0; f < in_dim; ++f) agg[f] += x[e.source][f];
        ++deg;
      }
    if (mode == Aggregation::Mean)
      for (auto& a : agg) a /= double(deg);
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = l.bias(o, 0);
      for (std::size_t f = 0; f < in_dim; ++f) {
        acc += l.weight(o, f) * x[i][f];
        acc += (tied ? l.weight(o, f) : l.weight_neighbor(o, f)) * agg[f];
      }
      z[i][o] = relu && acc < 0.0 ? 0.0 : acc;
    }
  }
  return z;
}

inline ModelOutput naive_forward(const ModelParams& p, const NodeMatrix& features, const GraphTopology& g) {
  const bool tied = p.config.tying == WeightTying::Tied;
  Rows x(features.rows(), std::vector<double>(2));
  for (Eigen::Index i = 0; i < features.rows(); ++i) x[i] = {features(i, 0), features(i, 1)};
  const auto h1 = naive_layer(p.sage1, x, g, tied, p.config.aggregation, true);
  const auto h2 = naive_layer(p.sage2, h1, g, tied, p.config.aggregation, true);
  const auto h3 = naive_layer(p.sage3, h2, g, tied, p.config.aggregation, false);
  ModelOutput out;
  out.h_hat.resize(features.rows(), 2);
  for (std::size_t i = 0; i < h3.size(); ++i) {
    out.h_hat(i, 0) = h3[i][0];
    out.h_hat(i, 1) = h3[i][1];
  }
  const std::size_t F = h2[0].size();
  std::vector<double> pooled(F, 0.0);
  for (const auto& row : h2)
    for (std::size_t f = 0; f < F; ++f) pooled[f] += row[f] / double(h2.size());
  double n = p.noise_fc2_bias(0, 0);
  for (std::size_t o = 0; o < F; ++o) {
    double a = p.noise_fc1_bias(o, 0);
    for (std::size_t f = 0; f < F; ++f) a += p.noise_fc1_weight(o, f) * pooled[f];
    n += p.noise_fc2_weight(0, o) * std::max(a, 0.0);
  }
  out.n_hat = n;
  return out;
}

}  // namespace gnce::testing
