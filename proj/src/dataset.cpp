// SPDX-License-Identifier: Apache-2.0
#include "gnce/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "gnce/binary_io.hpp"
#include "gnce/error.hpp"
#include "gnce/estimators.hpp"
#include "gnce/parallel.hpp"
#include "json.hpp"

namespace gnce {
namespace {

constexpr char kMagic[4] = {'G', 'N', 'C', 'E'};

SampleMeta meta_of(const ChannelParams& p, bool noiseless) {
  return {std::string(to_string(p.profile)), p.delay_spread_s * 1e9, p.doppler_hz,
          noiseless ? std::numeric_limits<double>::infinity() : p.snr_db, p.seed};
}

std::vector<cdouble> random_qpsk(std::size_t count, Rng& rng) {
  const double a = 1.0 / std::sqrt(2.0);
  std::vector<cdouble> out(count);
  for (auto& v : out) {
    const auto k = rng.uniform_index(4);
    v = {(k & 1) ? -a : a, (k & 2) ? -a : a};
  }
  return out;
}

}  // namespace

std::vector<float> to_tensor(const ResourceGrid& grid) {
  std::vector<float> out(grid.size() * 2);
  const auto flat = grid.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    out[2 * i] = static_cast<float>(flat[i].real());
    out[2 * i + 1] = static_cast<float>(flat[i].imag());
  }
  return out;
}

ResourceGrid from_tensor(std::span<const float> tensor, std::uint32_t M, std::uint32_t N) {
  if (tensor.size() != std::size_t{M} * N * 2) throw DataError("tensor size does not match grid");
  ResourceGrid g(M, N);
  auto flat = g.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = {tensor[2 * i], tensor[2 * i + 1]};
  return g;
}

Sample make_sample(const ChannelParams& params, const GridConfig& config,
                   const PilotPattern& pilots, bool noiseless) {
  auto ch = synth_channel(params, config);
  if (noiseless) ch.sigma2 = 0.0;
  // Data REs carry random QPSK; only the pilots matter for the LS input.
  Rng data_rng(derive_seed(params.seed, 1));
  const auto tx = fill_data_res(config, pilots,
                                random_qpsk(config.num_res() - pilots.positions.size(), data_rng));
  Rng noise_rng(derive_seed(params.seed, 2));
  const auto rx = apply_channel(tx, ch, noise_rng);
  const auto est = interpolate_2d(ls_at_pilots(rx, pilots), config);
  return {to_tensor(est.h_est), to_tensor(ch.h_true), static_cast<float>(ch.sigma2)};
}

Dataset gen_dataset(std::size_t count, const GridConfig& config, const ParamRanges& ranges,
                    std::uint64_t seed, const GenerationOptions& opts) {
  if (count == 0) throw ConfigError("gen_dataset: count must be at least 1");
  validate(config);
  ranges.validate();
  const auto pilots = make_pilot_pattern(config, opts.pilot_seed);
  Dataset ds{config.num_subcarriers(), config.num_symbols, {}, {}};
  ds.samples.resize(count);
  ds.meta.resize(count);
  parallel_for(count, opts.threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const auto params = sample_params(rng, ranges);
    ds.samples[i] = make_sample(params, config, pilots, opts.noiseless);
    ds.meta[i] = meta_of(params, opts.noiseless);
  });
  return ds;
}

Dataset gen_scenario_dataset(std::size_t count, const GridConfig& config, ChannelParams scenario,
                             std::uint64_t seed, const GenerationOptions& opts) {
  if (count == 0) throw ConfigError("gen_scenario_dataset: count must be at least 1");
  validate(config);
  const auto pilots = make_pilot_pattern(config, opts.pilot_seed);
  Dataset ds{config.num_subcarriers(), config.num_symbols, {}, {}};
  ds.samples.resize(count);
  ds.meta.resize(count);
  parallel_for(count, opts.threads, [&](std::size_t i) {
    auto params = scenario;
    params.seed = derive_seed(seed, i);
    ds.samples[i] = make_sample(params, config, pilots, opts.noiseless);
    ds.meta[i] = meta_of(params, opts.noiseless);
  });
  return ds;
}

void append(Dataset& into, Dataset&& other) {
  if (into.samples.empty() && into.num_subcarriers == 0) {
    into.num_subcarriers = other.num_subcarriers;
    into.num_symbols = other.num_symbols;
  }
  if (into.num_subcarriers != other.num_subcarriers || into.num_symbols != other.num_symbols) {
    throw DataError("cannot concatenate datasets with different grid shapes");
  }
  std::move(other.samples.begin(), other.samples.end(), std::back_inserter(into.samples));
  std::move(other.meta.begin(), other.meta.end(), std::back_inserter(into.meta));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1]");
  }
  const auto cut = std::min(ds.size(), static_cast<std::size_t>(std::llround(train_fraction * ds.size())));
  Dataset train{ds.num_subcarriers, ds.num_symbols, {}, {}};
  Dataset test = train;
  train.samples.assign(ds.samples.begin(), ds.samples.begin() + cut);
  test.samples.assign(ds.samples.begin() + cut, ds.samples.end());
  if (ds.meta.size() == ds.size()) {
    train.meta.assign(ds.meta.begin(), ds.meta.begin() + cut);
    test.meta.assign(ds.meta.begin() + cut, ds.meta.end());
  }
  return {std::move(train), std::move(test)};
}

std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p.replace_extension(".manifest.json");
  return p;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  io::write_u32(out, kDatasetVersion);
  io::write_u32(out, static_cast<std::uint32_t>(ds.size()));
  io::write_u32(out, ds.num_subcarriers);
  io::write_u32(out, ds.num_symbols);
  const auto per = ds.values_per_tensor();
  for (const auto& s : ds.samples) {
    if (s.input.size() != per || s.label_h.size() != per) {
      throw DataError("sample tensor shape does not match dataset header");
    }
    io::write_f32(out, s.input);
    io::write_f32(out, s.label_h);
    io::write_f32(out, s.label_noise);
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void write_manifest(const std::filesystem::path& path, const std::vector<SampleMeta>& meta) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : meta) {
    nlohmann::json e{{"profile", m.profile},
                     {"delay_spread_ns", m.delay_spread_ns},
                     {"doppler_hz", m.doppler_hz},
                     {"seed", m.seed}};
    // JSON has no infinity; the noiseless debug mode is written as null.
    e["snr_db"] = std::isfinite(m.snr_db) ? nlohmann::json(m.snr_db) : nlohmann::json(nullptr);
    arr.push_back(std::move(e));
  }
  io::write_text_file(path, arr.dump(1) + "\n");
}

std::vector<SampleMeta> read_manifest(const std::filesystem::path& path) {
  std::vector<SampleMeta> out;
  try {
    const auto arr = nlohmann::json::parse(io::read_text_file(path));
    for (const auto& e : arr) {
      SampleMeta m;
      m.profile = e.at("profile").get<std::string>();
      m.delay_spread_ns = e.at("delay_spread_ns").get<double>();
      m.doppler_hz = e.at("doppler_hz").get<double>();
      m.snr_db = e.at("snr_db").is_null() ? std::numeric_limits<double>::infinity()
                                          : e.at("snr_db").get<double>();
      m.seed = e.at("seed").get<std::uint64_t>();
      out.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  return out;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  const std::string where = "dataset " + path.string();
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw DataError(where + ": bad magic");
  }
  const auto version = io::read_u32(in, where);
  if (version != kDatasetVersion) {
    throw DataError(where + ": unsupported format version " + std::to_string(version));
  }
  const auto count = io::read_u32(in, where);
  Dataset ds;
  ds.num_subcarriers = io::read_u32(in, where);
  ds.num_symbols = io::read_u32(in, where);
  const auto per = ds.values_per_tensor();
  // Check the size up front so a corrupt header cannot trigger a huge allocation.
  const auto header_end = in.tellg();
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uintmax_t>(in.tellg());
  in.seekg(header_end);
  const std::uintmax_t expected =
      static_cast<std::uintmax_t>(header_end) + std::uintmax_t{count} * (2 * per + 1) * sizeof(float);
  if (file_size < expected) {
    throw DataError(where + ": truncated (" + std::to_string(file_size) + " bytes, header implies " +
                    std::to_string(expected) + ")");
  }
  if (file_size > expected) throw DataError(where + ": trailing bytes");
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.input.resize(per);
    s.label_h.resize(per);
    io::read_f32(in, s.input, where);
    io::read_f32(in, s.label_h, where);
    s.label_noise = io::read_f32(in, where);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(where + ": trailing bytes");
  const auto manifest = manifest_path_for(path);
  if (std::filesystem::exists(manifest)) {
    ds.meta = read_manifest(manifest);
    if (ds.meta.size() != ds.size()) {
      throw DataError(manifest.string() + ": manifest has " + std::to_string(ds.meta.size()) +
                      " entries for " + std::to_string(ds.size()) + " samples");
    }
  }
  return ds;
}

}  // namespace gnce
