// SPDX-License-Identifier: Apache-2.0
#include "gnce/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"

#include "gnce/error.hpp"
#include "gnce/parallel.hpp"
#include "gnce/rng.hpp"

namespace gnce {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_matching_dims(const Dataset& ds, const GraphTopology& g, std::string_view what) {
  if (ds.num_subcarriers != g.num_subcarriers || ds.num_symbols != g.num_symbols)
    throw DataError(std::string(what) + " is " + std::to_string(ds.num_subcarriers) + "x" +
                    std::to_string(ds.num_symbols) + " but the graph is " +
                    std::to_string(g.num_subcarriers) + "x" + std::to_string(g.num_symbols));
}

LossTerms sum_in_order(std::span<const LossTerms> terms) {
  LossTerms s;
  for (const auto& t : terms) {
    s.ce += t.ce;
    s.noise += t.noise;
    s.total += t.total;
  }
  const auto n = static_cast<double>(terms.size());
  return {s.ce / n, s.noise / n, s.total / n};
}

double median(std::vector<double> v) {
  const std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  const double hi = v[k];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
  return 0.5 * (lo + hi);
}

nlohmann::json epoch_record(const EpochStats& s) {
  nlohmann::json j = {{"record", "epoch"},
                      {"epoch", s.epoch},
                      {"mean_total_loss", s.total},
                      {"mean_ce_loss", s.ce},
                      {"mean_noise_loss", s.noise},
                      {"checkpoint_id", s.checkpoint_id}};
  if (s.holdout_total) j["holdout_total_loss"] = *s.holdout_total;
  return j;
}

/// Groups sample indices by SNR bucket (a single NaN bucket when ungrouped).
std::map<double, std::vector<std::size_t>> bucketize(const Dataset& ds, bool group_by_snr,
                                                     std::span<const std::size_t> indices) {
  if (group_by_snr && ds.meta.size() != ds.samples.size())
    throw DataError("grouping by SNR needs a manifest entry for every sample");
  std::map<double, std::vector<std::size_t>> buckets;
  for (std::size_t i : indices) {
    const double key =
        group_by_snr ? snr_bucket(ds.meta[i].snr_db) : std::numeric_limits<double>::quiet_NaN();
    // NaN never compares equal; use a fixed key for the ungrouped case.
    buckets[std::isnan(key) ? -std::numeric_limits<double>::max() : key].push_back(i);
  }
  return buckets;
}

double bucket_label(double key) {
  return key == -std::numeric_limits<double>::max() ? std::numeric_limits<double>::quiet_NaN() : key;
}

}  // namespace

void TrainConfig::validate(bool require_paths) const {
  if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be a finite value >= 0");
  if (!(weights.ce >= 0.0) || !(weights.noise >= 0.0))
    throw ConfigError("train.lambda_ce and train.lambda_no must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ConfigError("train.train_fraction must be in (0, 1]");
  if (model.hidden == 0) throw ConfigError("model.hidden must be positive");
  if (require_paths) {
    if (dataset_paths.empty()) throw ConfigError("train: no dataset path given");
    for (const auto& p : dataset_paths)
      if (p.empty()) throw ConfigError("train: empty dataset path");
    if (checkpoint_path.empty()) throw ConfigError("train: checkpoint path is empty");
  }
}

TrainReport train(const TrainConfig& config, const Dataset& train_set, const Dataset* holdout,
                  const GraphTopology& g, ModelParams& params, const TrainHooks& hooks) {
  config.validate(false);
  require_matching_dims(train_set, g, "training set");
  if (holdout != nullptr) require_matching_dims(*holdout, g, "held-out set");
  if (train_set.size() == 0) throw DataError("training set is empty");
  if (!(params.config == config.model)) throw ConfigError("parameters do not match model config");

  const auto start = Clock::now();
  const NoiseScale scale = config.noise_label_scale;
  const CheckpointMeta meta = meta_for(config.model, scale, g);
  AdamState adam = make_adam(params, AdamOptions{.lr = config.lr});

  std::ofstream report_file;
  if (!config.report_path.empty()) {
    if (config.report_path.has_parent_path())
      std::filesystem::create_directories(config.report_path.parent_path());
    report_file.open(config.report_path, std::ios::binary | std::ios::trunc);
    if (!report_file) throw DataError(config.report_path.string() + ": cannot open for writing");
  }

  TrainReport report;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::vector<LossTerms> per_sample(n);

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = Clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, epoch));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

    for (const std::size_t idx : order) {
      const Sample& s = train_set.samples[idx];
      const NodeMatrix x = node_features_from_sample(s.input, g);
      const NodeMatrix y = node_features_from_sample(s.label_h, g);
      const double target = noise_target(s.label_noise, scale);
      ForwardTrace trace;
      try {
        trace = forward(params, x, g);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", sample " + std::to_string(idx) +
                           ": " + e.what());
      }
      const LossTerms l = loss(trace.output, y, target, config.weights);
      if (!std::isfinite(l.total))
        throw NumericError("epoch " + std::to_string(epoch) + ", sample " + std::to_string(idx) +
                           ": non-finite loss");
      per_sample[idx] = l;
      adam_step(adam, params, backward(params, trace, x, g, y, target, config.weights));
    }

    const LossTerms mean = sum_in_order(per_sample);
    EpochStats stats{epoch, mean.total, mean.ce, mean.noise, std::nullopt, checkpoint_id(params), 0.0};
    if (holdout != nullptr && holdout->size() > 0 && config.eval_every > 0 &&
        epoch % config.eval_every == 0)
      stats.holdout_total = mean_loss(round_to_payload(params), *holdout, g, config.weights, scale).total;
    if (!config.checkpoint_path.empty()) save_checkpoint({params, meta}, config.checkpoint_path);
    stats.seconds = seconds_since(t0);
    if (report_file) report_file << epoch_record(stats).dump() << '\n';
    if (hooks.on_epoch) hooks.on_epoch(stats);
    report.epochs.push_back(std::move(stats));
  }

  report.params = round_to_payload(params);
  report.final_checkpoint_id = checkpoint_id(report.params);
  report.checkpoint_loss = mean_loss(report.params, train_set, g, config.weights, scale);
  if (report_file) {
    nlohmann::json j = {{"record", "final"},
                        {"checkpoint_id", report.final_checkpoint_id},
                        {"checkpoint_total_loss", report.checkpoint_loss.total},
                        {"checkpoint_ce_loss", report.checkpoint_loss.ce},
                        {"checkpoint_noise_loss", report.checkpoint_loss.noise}};
    report_file << j.dump() << '\n';
    if (!report_file) throw DataError(config.report_path.string() + ": write failed");
  }
  report.wall_clock_s = seconds_since(start);
  return report;
}

TrainReport train(const TrainConfig& config, const GraphTopology& g, const TrainHooks& hooks) {
  config.validate(true);
  Dataset all;
  for (const auto& path : config.dataset_paths) {
    Dataset ds = read_dataset(path);
    if (all.samples.empty() && all.num_subcarriers == 0) {
      all = std::move(ds);
    } else {
      append(all, std::move(ds));
    }
  }
  auto [train_set, holdout] = split_dataset(all, config.train_fraction);
  ModelParams params = init_params(config.init_seed, config.model);
  return train(config, train_set, &holdout, g, params, hooks);
}

LossTerms mean_loss(const ModelParams& params, const Dataset& ds, const GraphTopology& g,
                    LossWeights weights, NoiseScale scale, unsigned threads) {
  require_matching_dims(ds, g, "dataset");
  if (ds.size() == 0) throw DataError("dataset is empty");
  std::vector<LossTerms> terms(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    const Sample& s = ds.samples[i];
    const auto out = predict(params, node_features_from_sample(s.input, g), g);
    terms[i] = loss(out, node_features_from_sample(s.label_h, g),
                    noise_target(s.label_noise, scale), weights);
  });
  return sum_in_order(terms);
}

double snr_bucket(double snr_db) {
  if (std::isinf(snr_db)) return snr_db;
  return std::round(snr_db);
}

Observation observation_from_sample(const Sample& s, const GridConfig& config,
                                    ResourceGrid& truth_storage) {
  const std::uint32_t M = config.num_subcarriers();
  const std::uint32_t N = config.num_symbols;
  Observation obs;
  obs.config = &config;
  obs.ls_interpolated = from_tensor(s.input, M, N);
  obs.ls.positions = pilot_positions(config);
  obs.ls.values.reserve(obs.ls.positions.size());
  for (const auto& p : obs.ls.positions) obs.ls.values.push_back(obs.ls_interpolated.at(p));
  truth_storage = from_tensor(s.label_h, M, N);
  obs.truth_h = &truth_storage;
  obs.truth_sigma2 = s.label_noise;
  return obs;
}

MseTable evaluate_mse(const Estimator& est, const Dataset& testset, const GridConfig& config,
                      bool group_by_snr, unsigned threads, std::span<const double> expected_snrs) {
  if (testset.num_subcarriers != config.num_subcarriers() ||
      testset.num_symbols != config.num_symbols)
    throw DataError("test set grid does not match the configured grid");
  std::vector<double> per_sample(testset.size());
  parallel_for(testset.size(), threads, [&](std::size_t i) {
    ResourceGrid truth;
    const Observation obs = observation_from_sample(testset.samples[i], config, truth);
    per_sample[i] = mse(est.estimate(obs).h_est, truth);
  });

  MseTable table{est.name(), {}, {}};
  std::vector<std::size_t> all(testset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto buckets = bucketize(testset, group_by_snr, all);
  for (const auto& [key, idx] : buckets) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += per_sample[i];
    table.rows.push_back({bucket_label(key), sum / static_cast<double>(idx.size()), idx.size()});
  }
  if (group_by_snr)
    for (double s : expected_snrs)
      if (!buckets.contains(snr_bucket(s)))
        table.warnings.push_back("no samples in SNR bucket " + std::to_string(snr_bucket(s)) +
                                 " dB; bucket omitted");
  return table;
}

NoiseReport evaluate_noise(const GraphNetEstimator& est, const Dataset& testset, unsigned threads) {
  std::vector<double> n_hat(testset.size());
  parallel_for(testset.size(), threads, [&](std::size_t i) {
    const auto& g = est.graph();
    n_hat[i] = est.run(node_features_from_sample(testset.samples[i].input, g)).second;
  });

  std::vector<std::size_t> noisy;
  NoiseReport report;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const double s2 = testset.samples[i].label_noise;
    if (!(s2 > 0.0)) continue;
    noisy.push_back(i);
    report.n_hat.push_back(n_hat[i]);
    report.sigma2.push_back(s2);
  }
  const bool grouped = testset.meta.size() == testset.samples.size();
  for (const auto& [key, idx] : bucketize(testset, grouped, noisy)) {
    std::vector<double> rel;
    rel.reserve(idx.size());
    for (std::size_t i : idx) {
      const double s2 = testset.samples[i].label_noise;
      rel.push_back(std::abs(n_hat[i] - s2) / s2);
    }
    report.rows.push_back({bucket_label(key), median(std::move(rel)), idx.size()});
  }
  report.pearson = report.n_hat.size() >= 2 ? pearson(report.n_hat, report.sigma2)
                                            : std::numeric_limits<double>::quiet_NaN();
  return report;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ConfigError("pearson: size mismatch or empty input");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace gnce
