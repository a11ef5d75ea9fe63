// SPDX-License-Identifier: Apache-2.0
//
// OFDM resource-grid geometry, DM-RS placement and pilot symbols.
//
// Subcarriers are rows (m), OFDM symbols are columns (n), both 0-based.
// Flat storage is subcarrier-major: element (m, n) lives at m * N + n, which
// is also the node index used by the graph and the dataset tensor layout.
#pragma once

#include <complex>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace gnce {

using cdouble = std::complex<double>;

struct GridConfig {
  static constexpr std::uint32_t subcarriers_per_prb = 12;

  std::uint32_t num_prb = 51;
  std::uint32_t num_symbols = 14;
  std::vector<std::uint32_t> dmrs_symbol_indices{2, 11};
  std::vector<std::uint32_t> dmrs_subcarrier_offsets{0, 1, 6, 7};
  double scs_hz = 30e3;

  std::uint32_t num_subcarriers() const { return num_prb * subcarriers_per_prb; }
  std::size_t num_res() const { return std::size_t{num_subcarriers()} * num_symbols; }
  std::size_t num_pilots() const {
    return std::size_t{num_prb} * dmrs_subcarrier_offsets.size() * dmrs_symbol_indices.size();
  }
  /// Sorted pilot subcarriers shared by every DM-RS symbol.
  std::vector<std::uint32_t> pilot_subcarriers() const;

  bool operator==(const GridConfig&) const = default;
};

/// Validating constructor; throws ConfigError on an invalid layout.
GridConfig make_grid_config(std::uint32_t num_prb, std::vector<std::uint32_t> dmrs_symbols,
                            std::vector<std::uint32_t> dmrs_offsets,
                            std::uint32_t num_symbols = 14, double scs_hz = 30e3);

/// Throws ConfigError if `config` violates any layout invariant.
void validate(const GridConfig& config);

/// A resource element position.
struct GridPos {
  std::uint32_t m = 0;  // subcarrier
  std::uint32_t n = 0;  // OFDM symbol

  bool operator==(const GridPos&) const = default;
  /// Pilot order: by symbol first, then subcarrier.
  std::strong_ordering operator<=>(const GridPos& o) const {
    if (auto c = n <=> o.n; c != 0) return c;
    return m <=> o.m;
  }
};

/// All DM-RS positions ordered by (n, m).
std::vector<GridPos> pilot_positions(const GridConfig& config);

struct PilotPattern {
  std::vector<GridPos> positions;
  std::vector<cdouble> values;
  std::uint64_t seed = 0;

  bool operator==(const PilotPattern&) const = default;
};

/// Seeded QPSK pilots, phases in {pi/4, 3pi/4, 5pi/4, 7pi/4}.
PilotPattern make_pilot_pattern(const GridConfig& config, std::uint64_t seed);

/// M x N complex matrix in subcarrier-major storage.
class ResourceGrid {
 public:
  ResourceGrid() = default;
  ResourceGrid(std::uint32_t num_subcarriers, std::uint32_t num_symbols, cdouble fill = {})
      : rows_(num_subcarriers), cols_(num_symbols), data_(std::size_t{rows_} * cols_, fill) {}
  explicit ResourceGrid(const GridConfig& config, cdouble fill = {})
      : ResourceGrid(config.num_subcarriers(), config.num_symbols, fill) {}

  std::uint32_t num_subcarriers() const { return rows_; }
  std::uint32_t num_symbols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  cdouble& operator()(std::uint32_t m, std::uint32_t n) { return data_[std::size_t{m} * cols_ + n]; }
  const cdouble& operator()(std::uint32_t m, std::uint32_t n) const {
    return data_[std::size_t{m} * cols_ + n];
  }
  cdouble& at(GridPos p) { return (*this)(p.m, p.n); }
  const cdouble& at(GridPos p) const { return (*this)(p.m, p.n); }

  std::span<cdouble> flat() { return data_; }
  std::span<const cdouble> flat() const { return data_; }

  bool same_shape(const GridConfig& config) const {
    return rows_ == config.num_subcarriers() && cols_ == config.num_symbols;
  }
  bool operator==(const ResourceGrid&) const = default;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<cdouble> data_;
};

/// Places pilots and fills the remaining REs with `data_symbols`, symbol by
/// symbol (column-major). Throws ConfigError on a length mismatch.
ResourceGrid fill_data_res(const GridConfig& config, const PilotPattern& pilots,
                           std::span<const cdouble> data_symbols);

/// Reads the data REs back in the order fill_data_res wrote them.
std::vector<cdouble> extract_data_res(const GridConfig& config, const ResourceGrid& grid);

/// Pilot mask, true at DM-RS REs, subcarrier-major.
std::vector<bool> pilot_mask(const GridConfig& config);

void to_json(nlohmann::json& j, const GridConfig& c);
/// Strict: unknown keys and inconsistent derived fields are rejected.
void from_json(const nlohmann::json& j, GridConfig& c);

}  // namespace gnce
