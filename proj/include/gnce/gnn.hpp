// SPDX-License-Identifier: Apache-2.0
//
// GraphNet: three GraphSAGE layers (2 -> F -> F -> 2) estimating the channel
// at every RE, and a mean-pooled two-layer MLP estimating the noise power.
// Forward, backward and Adam are written out by hand on Eigen matrices.
//
// Layer l computes, for node i with incoming pilot neighbours N(i),
//   z_i = W_self x_i + W_nbr agg_{j in N(i)} x_j + b
// where agg is the mean (default) or the sum. In tied mode W_self == W_nbr,
// which is the configuration with 2307 parameters at F = 32.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gnce/estimators.hpp"
#include "gnce/graph.hpp"

namespace gnce {

enum class WeightTying { Tied, Untied };
enum class Aggregation { Mean, Sum };
/// Units of the noise head's target/output.
enum class NoiseScale { LinearPower, Db };

std::string_view to_string(WeightTying v);
std::string_view to_string(Aggregation v);
std::string_view to_string(NoiseScale v);
WeightTying parse_weight_tying(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
NoiseScale parse_noise_scale(std::string_view s);

struct ModelConfig {
  std::uint32_t hidden = 32;
  WeightTying tying = WeightTying::Tied;
  Aggregation aggregation = Aggregation::Mean;

  bool operator==(const ModelConfig&) const = default;
};

struct SageLayer {
  Eigen::MatrixXd weight;           // out x in; self term (and neighbours when tied)
  Eigen::MatrixXd weight_neighbor;  // out x in; empty when tied
  Eigen::MatrixXd bias;             // out x 1
};

struct ModelParams {
  ModelConfig config;
  SageLayer sage1;  // 2 -> F, ReLU
  SageLayer sage2;  // F -> F, ReLU
  SageLayer sage3;  // F -> 2, linear
  Eigen::MatrixXd noise_fc1_weight;  // F x F
  Eigen::MatrixXd noise_fc1_bias;    // F x 1
  Eigen::MatrixXd noise_fc2_weight;  // 1 x F
  Eigen::MatrixXd noise_fc2_bias;    // 1 x 1
};

template <class M>
struct BasicTensorRef {
  std::string_view name;
  M* value;
};
using TensorRef = BasicTensorRef<Eigen::MatrixXd>;
using ConstTensorRef = BasicTensorRef<const Eigen::MatrixXd>;

/// Every learnable tensor in a fixed order (the checkpoint order).
std::vector<TensorRef> tensors(ModelParams& p);
std::vector<ConstTensorRef> tensors(const ModelParams& p);

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ModelParams init_params(std::uint64_t seed, ModelConfig config = {});
ModelParams zeros_like(const ModelParams& p);
std::size_t count_params(const ModelParams& p);

struct ModelOutput {
  NodeMatrix h_hat;  // V x 2 (re, im)
  double n_hat = 0.0;
};

struct ForwardTrace {
  NodeMatrix h1;  // after ReLU, V x F
  NodeMatrix h2;  // after ReLU, V x F
  Eigen::VectorXd pooled;       // mean of h2 over nodes
  Eigen::VectorXd noise_pre;    // fc1 pre-activation
  Eigen::VectorXd noise_hidden; // ReLU(noise_pre)
  ModelOutput output;
};

/// Throws NumericError naming the layer on NaN/Inf activations.
ForwardTrace forward(const ModelParams& params, const NodeMatrix& features, const GraphTopology& g);
ModelOutput predict(const ModelParams& params, const NodeMatrix& features, const GraphTopology& g);

struct LossWeights {
  double ce = 1.0;
  double noise = 1.0;
};

struct LossTerms {
  double ce = 0.0;     // (1/V) sum_i |h_hat_i - h_i|^2
  double noise = 0.0;  // (n_hat - n)^2
  double total = 0.0;  // weighted sum
};

LossTerms loss(const ModelOutput& out, const NodeMatrix& label_h, double label_noise,
               LossWeights weights);

/// Exact gradient of loss() with respect to every parameter.
ModelParams backward(const ModelParams& params, const ForwardTrace& trace,
                     const NodeMatrix& features, const GraphTopology& g, const NodeMatrix& label_h,
                     double label_noise, LossWeights weights);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  ModelParams m;
  ModelParams v;
};

AdamState make_adam(const ModelParams& params, AdamOptions options = {});
void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads);

/// Noise target in the configured units and back to linear power.
double noise_target(double sigma2, NoiseScale scale);
double noise_to_linear(double n_hat, NoiseScale scale);

// ---------------------------------------------------------------------------
// Checkpoints: JSON manifest plus a raw little-endian float32 payload stored
// next to it with the ".bin" extension.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  ModelConfig model;
  NoiseScale noise_scale = NoiseScale::LinearPower;
  std::uint32_t k_nearest = 3;
  std::uint32_t num_subcarriers = 0;
  std::uint32_t num_symbols = 0;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  ModelParams params;
  CheckpointMeta meta;
};

CheckpointMeta meta_for(const ModelConfig& model, NoiseScale scale, const GraphTopology& g);

/// The payload bytes exactly as written to disk.
std::string payload_bytes(const ModelParams& p);
/// Stable identifier of a parameter set: fnv1a64 of its payload.
std::string checkpoint_id(const ModelParams& p);
/// Parameters rounded to what a checkpoint stores.
ModelParams round_to_payload(const ModelParams& p);

std::filesystem::path payload_path_for(const std::filesystem::path& manifest_path);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest_path);
/// Throws DataError on version, tensor layout or payload size mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& manifest_path);
/// Throws DataError if the checkpoint was trained for a different graph.
void require_compatible(const CheckpointMeta& meta, const GraphTopology& g);

/// Estimator adapter: runs the model on the LS + interpolation grid. With
/// use_noise_estimate = false the noise output is withheld (ZF equalization).
class GraphNetEstimator final : public Estimator {
 public:
  GraphNetEstimator(Checkpoint ckpt, const GraphTopology& g, bool use_noise_estimate = true);

  std::string name() const override { return use_noise_ ? "graphnet" : "graphnet_zf"; }
  FullEstimate estimate(const Observation& obs) const override;

  /// Model output for precomputed features (noise already in linear units).
  std::pair<NodeMatrix, double> run(const NodeMatrix& features) const;
  const Checkpoint& checkpoint() const { return ckpt_; }
  const GraphTopology& graph() const { return *graph_; }

 private:
  Checkpoint ckpt_;
  const GraphTopology* graph_;
  bool use_noise_;
};

/// Node features from a complex grid.
NodeMatrix features_from_grid(const ResourceGrid& grid, const GraphTopology& g);

}  // namespace gnce
