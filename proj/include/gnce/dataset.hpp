// SPDX-License-Identifier: Apache-2.0
//
// Labeled sample generation and the on-disk dataset format.
//
// Binary file (little-endian):
//   "GNCE" | version u32 | count u32 | M u32 | N u32
//   per sample: input  M*N*2 f32 (subcarrier-major, re/im interleaved)
//               label_h M*N*2 f32
//               label_noise f32
// Sidecar manifest: JSON array of {profile, delay_spread_ns, doppler_hz,
// snr_db, seed}, one entry per sample.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gnce/chansim.hpp"
#include "gnce/grid.hpp"

namespace gnce {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct Sample {
  std::vector<float> input;    // LS + interpolation estimate, M*N*2
  std::vector<float> label_h;  // true channel, M*N*2
  float label_noise = 0.0f;    // sigma^2 (linear)
};

struct SampleMeta {
  std::string profile;
  double delay_spread_ns = 0.0;
  double doppler_hz = 0.0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const SampleMeta&) const = default;
};

struct Dataset {
  std::uint32_t num_subcarriers = 0;
  std::uint32_t num_symbols = 0;
  std::vector<Sample> samples;
  std::vector<SampleMeta> meta;

  std::size_t size() const { return samples.size(); }
  std::size_t values_per_tensor() const { return std::size_t{num_subcarriers} * num_symbols * 2; }
};

struct GenerationOptions {
  std::uint64_t pilot_seed = 7;
  /// Debug mode: SNR = +inf, no noise, label_noise = 0.
  bool noiseless = false;
  unsigned threads = 1;
};

/// Converts a complex grid to the interleaved float tensor layout.
std::vector<float> to_tensor(const ResourceGrid& grid);
ResourceGrid from_tensor(std::span<const float> tensor, std::uint32_t M, std::uint32_t N);

/// One labeled sample from explicit channel parameters.
Sample make_sample(const ChannelParams& params, const GridConfig& config,
                   const PilotPattern& pilots, bool noiseless = false);

/// Sample i draws its parameters from the stream derive_seed(seed, i), so the
/// output depends only on (count, config, ranges, seed) and not on threads.
Dataset gen_dataset(std::size_t count, const GridConfig& config, const ParamRanges& ranges,
                    std::uint64_t seed, const GenerationOptions& opts = {});

/// Same as gen_dataset but every sample uses the given parameters with only
/// the fading/noise seed varying; used for fixed-scenario test sets.
Dataset gen_scenario_dataset(std::size_t count, const GridConfig& config, ChannelParams scenario,
                             std::uint64_t seed, const GenerationOptions& opts = {});

/// Appends `other` to `into`; shapes must agree.
void append(Dataset& into, Dataset&& other);

/// Splits by sample index: the first round(fraction * size) samples train.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction);

std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path);

void write_dataset(const std::filesystem::path& path, const Dataset& ds);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleMeta>& meta);
/// Reads the binary file and, if present, its manifest. Errors carry the path.
Dataset read_dataset(const std::filesystem::path& path);
std::vector<SampleMeta> read_manifest(const std::filesystem::path& path);

}  // namespace gnce
