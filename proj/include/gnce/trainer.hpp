// SPDX-License-Identifier: Apache-2.0
//
// Per-sample training loop with the joint channel/noise loss, checkpointing,
// and held-out MSE / noise-estimate evaluation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnce/dataset.hpp"
#include "gnce/estimators.hpp"
#include "gnce/gnn.hpp"
#include "gnce/graph.hpp"

namespace gnce {

struct TrainConfig {
  std::uint32_t epochs = 30;
  double lr = 1e-3;
  LossWeights weights;
  /// Visit-order shuffling. Kept apart from init_seed so that lr = 0 runs
  /// differ only in visit order.
  std::uint64_t seed = 1;
  std::uint64_t init_seed = 1;
  std::vector<std::filesystem::path> dataset_paths;
  std::filesystem::path checkpoint_path;
  /// JSON-lines report, one record per epoch; empty disables it.
  std::filesystem::path report_path;
  /// Held-out loss every this many epochs; 0 disables it.
  std::uint32_t eval_every = 0;
  NoiseScale noise_label_scale = NoiseScale::LinearPower;
  /// Leading fraction of the (concatenated) datasets used for training.
  double train_fraction = 0.9;
  ModelConfig model;

  /// Throws ConfigError on an invalid field.
  void validate(bool require_paths = true) const;
};

struct EpochStats {
  std::uint32_t epoch = 0;  // 1-based
  double total = 0.0;       // mean over the epoch's updates
  double ce = 0.0;
  double noise = 0.0;
  std::optional<double> holdout_total;
  std::string checkpoint_id;
  double seconds = 0.0;  // not written to the report file
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  /// Mean loss of the final saved parameters over the training split.
  LossTerms checkpoint_loss;
  std::string final_checkpoint_id;
  double wall_clock_s = 0.0;
  ModelParams params;  // as stored in the checkpoint
};

struct TrainHooks {
  std::function<void(const EpochStats&)> on_epoch;
};

/// In-memory core. Parameters are updated in place; if the config names a
/// checkpoint path, a checkpoint is written after every epoch.
TrainReport train(const TrainConfig& config, const Dataset& train_set, const Dataset* holdout,
                  const GraphTopology& g, ModelParams& params, const TrainHooks& hooks = {});

/// Reads config.dataset_paths, splits, initializes from init_seed and trains.
TrainReport train(const TrainConfig& config, const GraphTopology& g, const TrainHooks& hooks = {});

/// Mean loss over a dataset, summed in sample order.
LossTerms mean_loss(const ModelParams& params, const Dataset& ds, const GraphTopology& g,
                    LossWeights weights, NoiseScale scale, unsigned threads = 1);

/// SNR bucket of a sample: nearest integer dB (infinity for noiseless).
double snr_bucket(double snr_db);

struct MseRow {
  double snr_db = 0.0;  // NaN when not grouped
  double mse = 0.0;
  std::size_t count = 0;
};

struct MseTable {
  std::string estimator;
  std::vector<MseRow> rows;  // ascending SNR
  std::vector<std::string> warnings;
};

/// Builds the observation an estimator sees for a stored sample. The LS
/// pilot values are read back from the interpolated input.
Observation observation_from_sample(const Sample& s, const GridConfig& config,
                                    ResourceGrid& truth_storage);

/// Per-bucket mean of (1/V) sum |h_est - h|^2. Buckets listed in
/// `expected_snrs` that have no samples produce a warning and no row.
MseTable evaluate_mse(const Estimator& est, const Dataset& testset, const GridConfig& config,
                      bool group_by_snr, unsigned threads = 1,
                      std::span<const double> expected_snrs = {});

struct NoiseRow {
  double snr_db = 0.0;
  double median_rel_error = 0.0;  // median |n_hat - sigma2| / sigma2
  std::size_t count = 0;
};

struct NoiseReport {
  std::vector<NoiseRow> rows;
  double pearson = 0.0;  // corr(n_hat, sigma2) over all noisy samples
  std::vector<double> n_hat;   // linear units, per sample with sigma2 > 0
  std::vector<double> sigma2;
};

NoiseReport evaluate_noise(const GraphNetEstimator& est, const Dataset& testset,
                           unsigned threads = 1);

/// Sample Pearson correlation; NaN if either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace gnce
