// SPDX-License-Identifier: Apache-2.0
#include "gnce/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gnce/error.hpp"
#include "gnce/rng.hpp"

namespace gnce {
namespace {

bool strictly_increasing(const std::vector<std::uint32_t>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

}  // namespace

void validate(const GridConfig& c) {
  if (c.num_prb == 0) throw ConfigError("grid: num_prb must be positive");
  if (c.num_symbols == 0) throw ConfigError("grid: num_symbols must be positive");
  if (c.dmrs_symbol_indices.empty()) throw ConfigError("grid: empty DM-RS symbol list");
  if (c.dmrs_subcarrier_offsets.empty()) throw ConfigError("grid: empty DM-RS offset list");
  if (!strictly_increasing(c.dmrs_symbol_indices) ||
      c.dmrs_symbol_indices.back() >= c.num_symbols) {
    throw ConfigError("grid: DM-RS symbols must be strictly increasing and < num_symbols");
  }
  if (!strictly_increasing(c.dmrs_subcarrier_offsets) ||
      c.dmrs_subcarrier_offsets.back() >= GridConfig::subcarriers_per_prb) {
    throw ConfigError("grid: DM-RS offsets must be strictly increasing and < 12");
  }
  if (!(c.scs_hz > 0.0)) throw ConfigError("grid: scs_hz must be positive");
}

GridConfig make_grid_config(std::uint32_t num_prb, std::vector<std::uint32_t> dmrs_symbols,
                            std::vector<std::uint32_t> dmrs_offsets, std::uint32_t num_symbols,
                            double scs_hz) {
  GridConfig c;
  c.num_prb = num_prb;
  c.num_symbols = num_symbols;
  c.dmrs_symbol_indices = std::move(dmrs_symbols);
  c.dmrs_subcarrier_offsets = std::move(dmrs_offsets);
  c.scs_hz = scs_hz;
  validate(c);
  return c;
}

std::vector<std::uint32_t> GridConfig::pilot_subcarriers() const {
  std::vector<std::uint32_t> out;
  out.reserve(std::size_t{num_prb} * dmrs_subcarrier_offsets.size());
  for (std::uint32_t k = 0; k < num_prb; ++k) {
    for (auto o : dmrs_subcarrier_offsets) out.push_back(k * subcarriers_per_prb + o);
  }
  return out;
}

std::vector<GridPos> pilot_positions(const GridConfig& config) {
  const auto subcarriers = config.pilot_subcarriers();
  std::vector<GridPos> out;
  out.reserve(config.num_pilots());
  for (auto n : config.dmrs_symbol_indices) {
    for (auto m : subcarriers) out.push_back({m, n});
  }
  return out;
}

std::vector<bool> pilot_mask(const GridConfig& config) {
  std::vector<bool> mask(config.num_res(), false);
  for (auto p : pilot_positions(config)) mask[std::size_t{p.m} * config.num_symbols + p.n] = true;
  return mask;
}

PilotPattern make_pilot_pattern(const GridConfig& config, std::uint64_t seed) {
  validate(config);
  static const double a = 1.0 / std::numbers::sqrt2;
  static const cdouble qpsk[4] = {{a, a}, {-a, a}, {-a, -a}, {a, -a}};
  PilotPattern p;
  p.seed = seed;
  p.positions = pilot_positions(config);
  p.values.reserve(p.positions.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < p.positions.size(); ++i) p.values.push_back(qpsk[rng.uniform_index(4)]);
  return p;
}

ResourceGrid fill_data_res(const GridConfig& config, const PilotPattern& pilots,
                           std::span<const cdouble> data_symbols) {
  const auto expected = config.num_res() - pilots.positions.size();
  if (data_symbols.size() != expected) {
    throw ConfigError("fill_data_res: expected " + std::to_string(expected) +
                      " data symbols, got " + std::to_string(data_symbols.size()));
  }
  ResourceGrid grid(config);
  const auto mask = pilot_mask(config);
  std::size_t k = 0;
  for (std::uint32_t n = 0; n < config.num_symbols; ++n) {
    for (std::uint32_t m = 0; m < config.num_subcarriers(); ++m) {
      if (!mask[std::size_t{m} * config.num_symbols + n]) grid(m, n) = data_symbols[k++];
    }
  }
  for (std::size_t i = 0; i < pilots.positions.size(); ++i) grid.at(pilots.positions[i]) = pilots.values[i];
  return grid;
}

std::vector<cdouble> extract_data_res(const GridConfig& config, const ResourceGrid& grid) {
  const auto mask = pilot_mask(config);
  std::vector<cdouble> out;
  out.reserve(config.num_res() - config.num_pilots());
  for (std::uint32_t n = 0; n < config.num_symbols; ++n) {
    for (std::uint32_t m = 0; m < config.num_subcarriers(); ++m) {
      if (!mask[std::size_t{m} * config.num_symbols + n]) out.push_back(grid(m, n));
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const GridConfig& c) {
  j = nlohmann::json{{"num_prb", c.num_prb},
                     {"subcarriers_per_prb", GridConfig::subcarriers_per_prb},
                     {"num_subcarriers", c.num_subcarriers()},
                     {"num_symbols", c.num_symbols},
                     {"dmrs_symbol_indices", c.dmrs_symbol_indices},
                     {"dmrs_subcarrier_offsets", c.dmrs_subcarrier_offsets},
                     {"scs_hz", c.scs_hz}};
}

void from_json(const nlohmann::json& j, GridConfig& c) {
  if (!j.is_object()) throw ConfigError("grid config must be a JSON object");
  static const char* known[] = {"num_prb",          "subcarriers_per_prb",
                                "num_subcarriers",  "num_symbols",
                                "dmrs_symbol_indices", "dmrs_subcarrier_offsets",
                                "scs_hz"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("grid config: unknown key '" + key + "'");
    }
  }
  GridConfig out;
  try {
    if (j.contains("num_prb")) out.num_prb = j.at("num_prb").get<std::uint32_t>();
    if (j.contains("num_symbols")) out.num_symbols = j.at("num_symbols").get<std::uint32_t>();
    if (j.contains("dmrs_symbol_indices"))
      out.dmrs_symbol_indices = j.at("dmrs_symbol_indices").get<std::vector<std::uint32_t>>();
    if (j.contains("dmrs_subcarrier_offsets"))
      out.dmrs_subcarrier_offsets = j.at("dmrs_subcarrier_offsets").get<std::vector<std::uint32_t>>();
    if (j.contains("scs_hz")) out.scs_hz = j.at("scs_hz").get<double>();
    if (j.contains("subcarriers_per_prb") &&
        j.at("subcarriers_per_prb").get<std::uint32_t>() != GridConfig::subcarriers_per_prb) {
      throw ConfigError("grid config: subcarriers_per_prb is fixed at 12");
    }
    if (j.contains("num_subcarriers") &&
        j.at("num_subcarriers").get<std::uint32_t>() != out.num_subcarriers()) {
      throw ConfigError("grid config: num_subcarriers must equal num_prb * 12");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid config: ") + e.what());
  }
  validate(out);
  c = std::move(out);
}

}  // namespace gnce
