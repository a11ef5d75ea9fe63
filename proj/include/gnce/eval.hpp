// SPDX-License-Identifier: Apache-2.0
//
// Link-level evaluation: 16QAM, per-RE MMSE equalization with each
// estimator's channel/noise estimate, block errors from an uncoded SER
// threshold, and CSV reports.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gnce/chansim.hpp"
#include "gnce/estimators.hpp"
#include "gnce/graph.hpp"
#include "gnce/grid.hpp"

namespace gnce {

/// Gray-mapped 16QAM, one symbol per 4 bits (b0 b1 b2 b3):
/// I = (1 - 2 b0)(2 - (1 - 2 b2)), Q = (1 - 2 b1)(2 - (1 - 2 b3)), scaled by 1/sqrt(10).
/// Bits are 0/1 bytes; throws ConfigError unless bits.size() % 4 == 0.
std::vector<cdouble> qam16_map(std::span<const std::uint8_t> bits);
/// Hard decision to the nearest constellation point.
std::array<std::uint8_t, 4> qam16_demap(cdouble symbol);

/// conj(h) y / (|h|^2 + sigma2); 0 when the denominator is 0.
cdouble mmse_equalize(cdouble y, cdouble h_est, double sigma2_est);

struct BlerScenario {
  TdlName profile = TdlName::A;
  double delay_spread_s = 300e-9;
  double doppler_hz = 200.0;
};

struct BlerConfig {
  std::vector<double> snr_points;
  std::uint32_t blocks_per_snr = 500;
  BlerScenario scenario;
  double ser_threshold = 0.05;
  std::vector<std::string> estimators{"ls", "practical", "graphnet", "oracle"};
  /// Block b uses fading/payload/noise streams derived from (seed, b) at
  /// every SNR point, so curves use common random numbers across SNR.
  std::uint64_t seed = 1;
  std::uint64_t pilot_seed = 7;
  unsigned threads = 0;

  void validate() const;
};

struct BlockOutcome {
  std::uint32_t symbol_errors = 0;
  std::uint32_t symbols = 0;
  bool block_error = false;

  double ser() const { return symbols ? static_cast<double>(symbol_errors) / symbols : 0.0; }
};

struct BlerCurve {
  std::string estimator;
  std::vector<double> snr_db;
  std::vector<std::vector<BlockOutcome>> blocks;  // [snr][block]

  double bler(std::size_t snr_index) const;
  std::vector<double> bler() const;
};

struct BlerResult {
  std::vector<BlerCurve> curves;  // in estimator order
};

/// Every estimator sees the same received grid for a given (SNR, block).
BlerResult run_bler_detailed(const BlerConfig& config, const GridConfig& grid,
                             std::span<const Estimator* const> estimators);

struct ReportRow {
  std::string estimator;
  double snr_db = 0.0;
  std::string metric;
  double value = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
};

EvalReport bler_report(const BlerResult& result);
EvalReport run_bler(const BlerConfig& config, const GridConfig& grid,
                    std::span<const Estimator* const> estimators);

/// Header `estimator,snr_db,metric,value,count`, rows sorted by
/// (metric, estimator, snr).
std::string format_csv(const EvalReport& report);
void emit_csv(const EvalReport& report, const std::filesystem::path& path);

/// Spearman rank correlation with average ranks for ties; NaN if either
/// side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// What make_estimator may need. The graph and checkpoint are required only
/// for the graphnet estimators.
struct EstimatorContext {
  const GraphTopology* graph = nullptr;
  std::filesystem::path checkpoint;
  PracticalOptions practical;
};

/// Names: ls, practical, graphnet, graphnet_zf, oracle. Throws ConfigError
/// on an unknown name, DataError on an unusable checkpoint.
std::unique_ptr<Estimator> make_estimator(std::string_view name, const EstimatorContext& ctx);
std::vector<std::string> estimator_names();

}  // namespace gnce
