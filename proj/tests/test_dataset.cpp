// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "gnce/binary_io.hpp"
#include "gnce/dataset.hpp"
#include "gnce/error.hpp"
#include "gnce/estimators.hpp"

using namespace gnce;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gnce_test_dataset";
  fs::create_directories(dir);
  return dir / name;
}

const GridConfig kSmall = make_grid_config(3, {2, 11}, {0, 1, 6, 7});

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("tensor layout is subcarrier-major with interleaved re/im") {
  ResourceGrid g(2, 3);
  g(1, 2) = {0.5, -0.25};
  const auto t = to_tensor(g);
  REQUIRE(t.size() == 12);
  CHECK(t[2 * (1 * 3 + 2)] == 0.5f);
  CHECK(t[2 * (1 * 3 + 2) + 1] == -0.25f);
  CHECK(from_tensor(t, 2, 3) == g);
  CHECK_THROWS_AS(from_tensor(t, 3, 3), DataError);
}

TEST_CASE("a sample holds LS+LI input, true channel and noise power") {
  const auto pilots = make_pilot_pattern(kSmall, 7);
  const ChannelParams p{TdlName::B, 80e-9, 40.0, 6.0, 321};
  const auto s = make_sample(p, kSmall, pilots);
  const auto ch = synth_channel(p, kSmall);
  CHECK(s.label_h == to_tensor(ch.h_true));
  CHECK(s.label_noise == static_cast<float>(p.sigma2()));
  // Noiseless input equals the interpolated true pilot channel.
  const auto clean = make_sample(p, kSmall, pilots, true);
  CHECK(clean.label_noise == 0.0f);
  SparseEstimate truth_at_pilots{pilots.positions, {}};
  for (auto pos : pilots.positions) truth_at_pilots.values.push_back(ch.h_true.at(pos));
  const auto expected = to_tensor(interpolate_2d(truth_at_pilots, kSmall).h_est);
  REQUIRE(clean.input.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(clean.input[i] - expected[i]) <= 1e-6f);
  CHECK(s.input != clean.input);
}

TEST_CASE("generation is deterministic and independent of the thread count") {
  ParamRanges r;
  GenerationOptions one{7, false, 1}, three{7, false, 3};
  const auto a = gen_dataset(6, kSmall, r, 99, one);
  const auto b = gen_dataset(6, kSmall, r, 99, three);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.samples[i].input == b.samples[i].input);
    CHECK(a.samples[i].label_h == b.samples[i].label_h);
    CHECK(a.meta[i] == b.meta[i]);
  }
  const auto c = gen_dataset(6, kSmall, r, 100, one);
  CHECK(a.samples[0].label_h != c.samples[0].label_h);
  CHECK_THROWS_AS(gen_dataset(0, kSmall, r, 1), ConfigError);
}

TEST_CASE("manifest SNRs stay on the configured grid") {
  const auto ds = gen_dataset(40, kSmall, ParamRanges{}, 3);
  for (const auto& m : ds.meta) {
    CHECK_UNARY(m.snr_db >= -5.0);
    CHECK_UNARY(m.snr_db <= 20.0);
    CHECK(std::fmod(m.snr_db + 5.0, 2.0) == 0.0);
  }
}

TEST_CASE("write/read round trip, byte-identical rewrites") {
  const auto ds = gen_dataset(3, kSmall, ParamRanges{}, 5);
  const auto path = scratch("rt.bin");
  write_dataset(path, ds);
  write_manifest(manifest_path_for(path), ds.meta);
  const auto back = read_dataset(path);
  CHECK(back.num_subcarriers == ds.num_subcarriers);
  CHECK(back.num_symbols == ds.num_symbols);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.samples[i].input == ds.samples[i].input);
    CHECK(back.samples[i].label_h == ds.samples[i].label_h);
    CHECK(back.samples[i].label_noise == ds.samples[i].label_noise);
    CHECK(back.meta[i] == ds.meta[i]);
  }
  const auto first = io::read_text_file(path);
  const auto path2 = scratch("rt2.bin");
  write_dataset(path2, back);
  CHECK(io::read_text_file(path2) == first);
  // Header: magic, version, count, M, N.
  CHECK(first.substr(0, 4) == "GNCE");
  CHECK(first.size() == 20 + 3 * (2 * ds.values_per_tensor() + 1) * 4);
}

TEST_CASE("corrupt files are rejected with the path in the message") {
  const auto ds = gen_dataset(2, kSmall, ParamRanges{}, 5);
  const auto path = scratch("bad.bin");
  write_dataset(path, ds);
  const auto bytes = io::read_text_file(path);

  io::write_text_file(path, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("bad.bin"), DataError);
  io::write_text_file(path, bytes + "x");
  CHECK_THROWS_AS(read_dataset(path), DataError);
  io::write_text_file(path, "NOPE" + bytes.substr(4));
  CHECK_THROWS_AS(read_dataset(path), DataError);
  auto v2 = bytes;
  v2[4] = 2;
  io::write_text_file(path, v2);
  CHECK_THROWS_AS(read_dataset(path), DataError);
  CHECK_THROWS_AS(read_dataset(scratch("missing.bin")), DataError);

  io::write_text_file(path, bytes);
  write_manifest(manifest_path_for(path), {ds.meta[0]});
  CHECK_THROWS_AS(read_dataset(path), DataError);
  fs::remove(manifest_path_for(path));
}

TEST_CASE("noiseless mode writes null SNR") {
  const auto ds = gen_dataset(2, kSmall, ParamRanges{}, 5, {7, true, 1});
  CHECK(std::isinf(ds.meta[0].snr_db));
  CHECK(ds.samples[0].label_noise == 0.0f);
  const auto path = scratch("clean.manifest.json");
  write_manifest(path, ds.meta);
  CHECK(io::read_text_file(path).find("\"snr_db\": null") != std::string::npos);
  CHECK(std::isinf(read_manifest(path)[1].snr_db));
}

TEST_CASE("split by index and append") {
  auto ds = gen_dataset(10, kSmall, ParamRanges{}, 5);
  const auto [train, test] = split_dataset(ds, 0.9);
  CHECK(train.size() == 9);
  CHECK(test.size() == 1);
  CHECK(test.samples[0].input == ds.samples[9].input);
  CHECK(test.meta[0] == ds.meta[9]);
  Dataset joined;
  append(joined, Dataset(train));
  append(joined, Dataset(test));
  CHECK(joined.size() == 10);
  Dataset other{12, 14, {}, {}};
  CHECK_THROWS_AS(append(joined, std::move(other)), DataError);
  CHECK_THROWS_AS(split_dataset(ds, 0.0), ConfigError);
}

TEST_CASE("fixed-scenario datasets vary only the seed") {
  const auto ds = gen_scenario_dataset(3, kSmall, {TdlName::A, 300e-9, 200.0, 10.0, 0}, 4);
  for (const auto& m : ds.meta) {
    CHECK(m.profile == "TDL-A");
    CHECK(m.delay_spread_ns == doctest::Approx(300.0));
    CHECK(m.doppler_hz == 200.0);
    CHECK(m.snr_db == 10.0);
  }
  CHECK(ds.meta[0].seed != ds.meta[1].seed);
}

}  // TEST_SUITE
