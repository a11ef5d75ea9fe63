// SPDX-License-Identifier: Apache-2.0
#include "gnce/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "gnce/binary_io.hpp"
#include "gnce/error.hpp"
#include "gnce/gnn.hpp"
#include "gnce/parallel.hpp"
#include "gnce/rng.hpp"
#include "gnce/trainer.hpp"

namespace gnce {

namespace {

const double kQamScale = 1.0 / std::sqrt(10.0);

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<cdouble> qam16_map(std::span<const std::uint8_t> bits) {
  if (bits.size() % 4 != 0)
    throw ConfigError("qam16_map: bit count " + std::to_string(bits.size()) +
                      " is not a multiple of 4");
  std::vector<cdouble> out(bits.size() / 4);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto* b = &bits[4 * k];
    for (int i = 0; i < 4; ++i)
      if (b[i] > 1) throw ConfigError("qam16_map: bits must be 0 or 1");
    const double re = (1.0 - 2.0 * b[0]) * (2.0 - (1.0 - 2.0 * b[2]));
    const double im = (1.0 - 2.0 * b[1]) * (2.0 - (1.0 - 2.0 * b[3]));
    out[k] = cdouble(re, im) * kQamScale;
  }
  return out;
}

std::array<std::uint8_t, 4> qam16_demap(cdouble s) {
  const double re = s.real() / kQamScale;
  const double im = s.imag() / kQamScale;
  return {static_cast<std::uint8_t>(re < 0.0), static_cast<std::uint8_t>(im < 0.0),
          static_cast<std::uint8_t>(std::abs(re) > 2.0), static_cast<std::uint8_t>(std::abs(im) > 2.0)};
}

cdouble mmse_equalize(cdouble y, cdouble h_est, double sigma2_est) {
  if (!(sigma2_est >= 0.0)) throw ConfigError("mmse_equalize: sigma2_est must be >= 0");
  const double denom = std::norm(h_est) + sigma2_est;
  if (denom == 0.0) return {0.0, 0.0};
  return std::conj(h_est) * y / denom;
}

void BlerConfig::validate() const {
  if (snr_points.empty()) throw ConfigError("bler.snr_points is empty");
  for (double s : snr_points)
    if (!std::isfinite(s)) throw ConfigError("bler.snr_points must be finite");
  if (blocks_per_snr < 1) throw ConfigError("bler.blocks_per_snr must be at least 1");
  if (!(ser_threshold >= 0.0 && ser_threshold < 1.0))
    throw ConfigError("bler.ser_threshold must be in [0, 1)");
  if (!(scenario.delay_spread_s >= 0.0) || !(scenario.doppler_hz >= 0.0))
    throw ConfigError("bler scenario needs non-negative delay spread and Doppler");
  if (estimators.empty()) throw ConfigError("bler.estimators is empty");
}

double BlerCurve::bler(std::size_t s) const {
  const auto& b = blocks.at(s);
  const auto errors = std::count_if(b.begin(), b.end(), [](const BlockOutcome& o) { return o.block_error; });
  return static_cast<double>(errors) / static_cast<double>(b.size());
}

std::vector<double> BlerCurve::bler() const {
  std::vector<double> out(blocks.size());
  for (std::size_t s = 0; s < blocks.size(); ++s) out[s] = bler(s);
  return out;
}

BlerResult run_bler_detailed(const BlerConfig& config, const GridConfig& grid,
                             std::span<const Estimator* const> estimators) {
  config.validate();
  validate(grid);
  if (estimators.empty()) throw ConfigError("run_bler: no estimators");
  const auto pilots = make_pilot_pattern(grid, config.pilot_seed);
  const std::size_t num_data = grid.num_res() - pilots.positions.size();
  const std::size_t S = config.snr_points.size();
  const std::size_t B = config.blocks_per_snr;

  BlerResult result;
  for (const Estimator* e : estimators) {
    result.curves.push_back({e->name(), config.snr_points, {}});
    result.curves.back().blocks.assign(S, std::vector<BlockOutcome>(B));
  }

  // Data REs in fill order, so positions line up with extract_data_res.
  std::vector<GridPos> data_pos;
  {
    const auto mask = pilot_mask(grid);
    for (std::uint32_t n = 0; n < grid.num_symbols; ++n)
      for (std::uint32_t m = 0; m < grid.num_subcarriers(); ++m)
        if (!mask[std::size_t{m} * grid.num_symbols + n]) data_pos.push_back({m, n});
  }

  parallel_for(S * B, config.threads, [&](std::size_t job) {
    const std::size_t s = job / B;
    const std::size_t b = job % B;
    const std::uint64_t block_seed = derive_seed(config.seed, b);
    const ChannelParams params{config.scenario.profile, config.scenario.delay_spread_s,
                               config.scenario.doppler_hz, config.snr_points[s], block_seed};
    const auto ch = synth_channel(params, grid);

    Rng bit_rng(derive_seed(block_seed, 1));
    std::vector<std::uint8_t> bits(4 * num_data);
    for (auto& bit : bits) bit = static_cast<std::uint8_t>(bit_rng.next_u64() >> 63);
    const auto symbols = qam16_map(bits);
    const auto tx = fill_data_res(grid, pilots, symbols);
    Rng noise_rng(derive_seed(block_seed, 2));
    const auto rx = apply_channel(tx, ch, noise_rng);

    Observation obs = observe(rx, pilots, grid);
    obs.truth_h = &ch.h_true;
    obs.truth_sigma2 = ch.sigma2;

    for (std::size_t e = 0; e < estimators.size(); ++e) {
      const FullEstimate est = estimators[e]->estimate(obs);
      if (!est.h_est.same_shape(grid))
        throw ConfigError("estimator " + estimators[e]->name() + " returned a wrongly sized grid");
      const double s2 = std::max(est.sigma2_est.value_or(0.0), 0.0);
      BlockOutcome out;
      out.symbols = static_cast<std::uint32_t>(num_data);
      for (std::size_t k = 0; k < num_data; ++k) {
        const GridPos p = data_pos[k];
        const auto dec = qam16_demap(mmse_equalize(rx.at(p), est.h_est.at(p), s2));
        if (!std::equal(dec.begin(), dec.end(), &bits[4 * k])) ++out.symbol_errors;
      }
      out.block_error = out.ser() > config.ser_threshold;
      result.curves[e].blocks[s][b] = out;
    }
  });
  return result;
}

EvalReport bler_report(const BlerResult& result) {
  EvalReport report;
  for (const auto& c : result.curves)
    for (std::size_t s = 0; s < c.snr_db.size(); ++s)
      report.rows.push_back({c.estimator, c.snr_db[s], "bler", c.bler(s), c.blocks[s].size()});
  return report;
}

EvalReport run_bler(const BlerConfig& config, const GridConfig& grid,
                    std::span<const Estimator* const> estimators) {
  return bler_report(run_bler_detailed(config, grid, estimators));
}

std::string format_csv(const EvalReport& report) {
  std::vector<const ReportRow*> rows;
  for (const auto& r : report.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow* a, const ReportRow* b) {
    return std::tie(a->metric, a->estimator, a->snr_db) < std::tie(b->metric, b->estimator, b->snr_db);
  });
  std::string out = "estimator,snr_db,metric,value,count\n";
  for (const auto* r : rows)
    out += r->estimator + "," + format_double(r->snr_db) + "," + r->metric + "," +
           format_double(r->value) + "," + std::to_string(r->count) + "\n";
  return out;
}

void emit_csv(const EvalReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_text_file(path, format_csv(report));
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman: need two equal-length series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<std::string> estimator_names() {
  return {"ls", "practical", "graphnet", "graphnet_zf", "oracle"};
}

std::unique_ptr<Estimator> make_estimator(std::string_view name, const EstimatorContext& ctx) {
  if (name == "ls") return std::make_unique<LsLiEstimator>();
  if (name == "practical") return std::make_unique<PracticalEstimator>(ctx.practical);
  if (name == "oracle") return std::make_unique<OracleEstimator>();
  if (name == "graphnet" || name == "graphnet_zf") {
    if (ctx.graph == nullptr) throw ConfigError(std::string(name) + " needs the graph");
    if (ctx.checkpoint.empty()) throw ConfigError(std::string(name) + " needs a checkpoint path");
    return std::make_unique<GraphNetEstimator>(load_checkpoint(ctx.checkpoint), *ctx.graph,
                                               name == "graphnet");
  }
  std::string known;
  for (const auto& n : estimator_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown estimator '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace gnce
