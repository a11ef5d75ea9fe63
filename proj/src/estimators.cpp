// SPDX-License-Identifier: Apache-2.0
#include "gnce/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unsupported/Eigen/FFT>

#include "gnce/error.hpp"

namespace gnce {
namespace {

/// Linear interpolation of (xs, ys) at integer positions [0, count), holding
/// the end values outside [xs.front(), xs.back()]. xs strictly increasing.
void interp_1d(std::span<const std::uint32_t> xs, std::span<const cdouble> ys, std::uint32_t count,
               std::span<cdouble> out) {
  std::size_t seg = 0;
  for (std::uint32_t x = 0; x < count; ++x) {
    if (x <= xs.front()) {
      out[x] = ys.front();
    } else if (x >= xs.back()) {
      out[x] = ys.back();
    } else {
      while (xs[seg + 1] < x) ++seg;
      if (xs[seg + 1] == x) {
        out[x] = ys[seg + 1];
        continue;
      }
      const double t = static_cast<double>(x - xs[seg]) / (xs[seg + 1] - xs[seg]);
      out[x] = ys[seg] + t * (ys[seg + 1] - ys[seg]);
    }
  }
}

/// Pilot values arranged per DM-RS symbol on the shared subcarrier list.
struct PilotTable {
  std::vector<std::uint32_t> subcarriers;
  std::vector<std::uint32_t> symbols;
  std::vector<std::vector<cdouble>> rows;  // rows[symbol index][subcarrier index]
};

PilotTable tabulate(const SparseEstimate& sparse, const GridConfig& config) {
  if (sparse.positions.size() != sparse.values.size()) {
    throw ConfigError("sparse estimate: positions and values differ in length");
  }
  PilotTable t;
  t.subcarriers = config.pilot_subcarriers();
  t.symbols = config.dmrs_symbol_indices;
  if (t.subcarriers.empty() || t.symbols.empty()) {
    throw ConfigError("interpolation needs at least one pilot subcarrier and one pilot symbol");
  }
  if (sparse.positions != pilot_positions(config)) {
    throw ConfigError("sparse estimate does not cover the configured pilot pattern");
  }
  const std::size_t per_symbol = t.subcarriers.size();
  t.rows.resize(t.symbols.size());
  for (std::size_t s = 0; s < t.symbols.size(); ++s) {
    t.rows[s].assign(sparse.values.begin() + s * per_symbol,
                     sparse.values.begin() + (s + 1) * per_symbol);
  }
  return t;
}

FullEstimate interpolate_table(const PilotTable& t, const GridConfig& config) {
  const std::uint32_t M = config.num_subcarriers();
  const std::uint32_t N = config.num_symbols;
  // Frequency pass on every DM-RS symbol.
  std::vector<std::vector<cdouble>> freq(t.symbols.size(), std::vector<cdouble>(M));
  for (std::size_t s = 0; s < t.symbols.size(); ++s) interp_1d(t.subcarriers, t.rows[s], M, freq[s]);

  FullEstimate out{ResourceGrid(M, N), std::nullopt};
  std::vector<cdouble> column(t.symbols.size());
  std::vector<cdouble> row(N);
  for (std::uint32_t m = 0; m < M; ++m) {
    for (std::size_t s = 0; s < t.symbols.size(); ++s) column[s] = freq[s][m];
    interp_1d(t.symbols, column, N, row);
    for (std::uint32_t n = 0; n < N; ++n) out.h_est(m, n) = row[n];
  }
  return out;
}

std::size_t ceil_fraction(std::size_t k, double fraction) {
  return std::min(k, static_cast<std::size_t>(std::ceil(static_cast<double>(k) * fraction)));
}

}  // namespace

SparseEstimate ls_at_pilots(const ResourceGrid& received, const PilotPattern& pilots) {
  SparseEstimate out;
  out.positions = pilots.positions;
  out.values.reserve(pilots.positions.size());
  for (std::size_t i = 0; i < pilots.positions.size(); ++i) {
    const cdouble p = pilots.values[i];
    const double power = std::norm(p);
    if (power == 0.0) throw ConfigError("ls_at_pilots: zero pilot value");
    out.values.push_back(std::conj(p) * received.at(pilots.positions[i]) / power);
  }
  return out;
}

FullEstimate interpolate_2d(const SparseEstimate& sparse, const GridConfig& config) {
  return interpolate_table(tabulate(sparse, config), config);
}

DenoisedPilots cir_denoise(std::span<const cdouble> pilot_freq, const PracticalOptions& opts) {
  const std::size_t K = pilot_freq.size();
  DenoisedPilots out;
  if (K == 0) return out;
  const double scale = std::sqrt(static_cast<double>(K));

  Eigen::FFT<double> fft;
  std::vector<cdouble> freq(pilot_freq.begin(), pilot_freq.end());
  std::vector<cdouble> cir;
  fft.inv(cir, freq);  // includes 1/K
  for (auto& c : cir) c *= scale;

  const std::size_t window = ceil_fraction(K, opts.window_fraction);
  const std::size_t floor_start = std::max(window, K - ceil_fraction(K, opts.noise_fraction));
  double floor = 0.0;
  if (floor_start < K) {
    for (std::size_t i = floor_start; i < K; ++i) floor += std::norm(cir[i]);
    floor /= static_cast<double>(K - floor_start);
  }
  const double threshold = opts.kappa * floor;
  for (std::size_t i = 0; i < K; ++i) {
    const double power = std::norm(cir[i]);
    if (i >= window || power < threshold) {
      out.removed_energy += power;
      cir[i] = 0.0;
    }
  }
  fft.fwd(out.values, cir);
  for (auto& v : out.values) v /= scale;
  return out;
}

FullEstimate practical_from_ls(const SparseEstimate& ls, const GridConfig& config,
                               const PracticalOptions& opts) {
  auto table = tabulate(ls, config);
  const double K = static_cast<double>(table.subcarriers.size());
  double removed = 0.0;
  for (auto& row : table.rows) {
    auto d = cir_denoise(row, opts);
    removed += d.removed_energy / K;
    row = std::move(d.values);
  }
  auto out = interpolate_table(table, config);
  // A noiseless grid can remove exactly nothing; keep the estimate positive.
  out.sigma2_est = std::max(removed / static_cast<double>(table.rows.size()),
                            std::numeric_limits<double>::min());
  return out;
}

FullEstimate practical_estimate(const ResourceGrid& received, const PilotPattern& pilots,
                                const GridConfig& config, const PracticalOptions& opts) {
  return practical_from_ls(ls_at_pilots(received, pilots), config, opts);
}

double mse(const ResourceGrid& est, const ResourceGrid& truth) {
  if (est.num_subcarriers() != truth.num_subcarriers() || est.num_symbols() != truth.num_symbols()) {
    throw ConfigError("mse: grid shapes differ");
  }
  const auto a = est.flat();
  const auto b = truth.flat();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

Observation observe(const ResourceGrid& received, const PilotPattern& pilots,
                    const GridConfig& config) {
  Observation obs;
  obs.config = &config;
  obs.ls = ls_at_pilots(received, pilots);
  obs.ls_interpolated = interpolate_2d(obs.ls, config).h_est;
  return obs;
}

FullEstimate LsLiEstimator::estimate(const Observation& obs) const {
  return {obs.ls_interpolated, std::nullopt};
}

FullEstimate PracticalEstimator::estimate(const Observation& obs) const {
  return practical_from_ls(obs.ls, *obs.config, opts_);
}

FullEstimate OracleEstimator::estimate(const Observation& obs) const {
  if (obs.truth_h == nullptr) throw ConfigError("oracle estimator needs the true channel");
  return {*obs.truth_h, obs.truth_sigma2};
}

}  // namespace gnce
