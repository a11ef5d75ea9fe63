// SPDX-License-Identifier: Apache-2.0
#include "gnce/chansim.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "gnce/error.hpp"
#include "tdl_table_data.hpp"

namespace gnce {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("TDL table: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace

std::string_view to_string(TdlName name) {
  static constexpr std::array<std::string_view, 5> names{"TDL-A", "TDL-B", "TDL-C", "TDL-D",
                                                         "TDL-E"};
  return names[static_cast<int>(name)];
}

TdlName parse_tdl_name(std::string_view text) {
  for (auto n : all_tdl_names()) {
    if (to_string(n) == text) return n;
  }
  throw ConfigError("unknown TDL profile '" + std::string(text) + "'");
}

std::vector<TdlName> all_tdl_names() {
  return {TdlName::A, TdlName::B, TdlName::C, TdlName::D, TdlName::E};
}

std::vector<double> TdlProfile::normalized_powers() const {
  std::vector<double> p(tap_powers_db.size());
  std::transform(tap_powers_db.begin(), tap_powers_db.end(), p.begin(),
                 [](double db) { return std::pow(10.0, db / 10.0); });
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  return p;
}

std::vector<TdlProfile> parse_tdl_table(std::string_view csv) {
  std::map<TdlName, TdlProfile> by_name;
  bool header = true;
  while (!csv.empty()) {
    const auto eol = csv.find('\n');
    auto line = csv.substr(0, eol);
    csv = eol == std::string_view::npos ? std::string_view{} : csv.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "profile,tap,normalized_delay,power_db") throw DataError("TDL table: bad header");
      header = false;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw DataError("TDL table: expected 4 columns in '" + std::string(line) + "'");
    const auto name = parse_tdl_name(cols[0]);
    auto& prof = by_name[name];
    prof.name = name;
    prof.normalized_delays.push_back(parse_double(cols[2], "delay"));
    prof.tap_powers_db.push_back(parse_double(cols[3], "power"));
  }
  std::vector<TdlProfile> out;
  for (auto& [_, prof] : by_name) {
    if (prof.normalized_delays.front() != 0.0) {
      throw DataError("TDL table: first tap of " + std::string(to_string(prof.name)) +
                      " must have zero delay");
    }
    for (double d : prof.normalized_delays) {
      if (d < 0.0) throw DataError("TDL table: negative delay");
    }
    out.push_back(std::move(prof));
  }
  return out;
}

std::string_view bundled_tdl_table() { return detail::kTdlTableCsv; }

const TdlProfile& tdl_profile(TdlName name) {
  static const std::vector<TdlProfile> table = [] {
    auto t = parse_tdl_table(bundled_tdl_table());
    if (t.size() != 5) throw DataError("bundled TDL table must define TDL-A..TDL-E");
    return t;
  }();
  return table[static_cast<int>(name)];
}

double ChannelParams::sigma2() const { return std::pow(10.0, -snr_db / 10.0); }

std::vector<double> SnrSpec::grid_values() const {
  std::vector<double> out;
  if (step_db <= 0.0) return {min_db};
  for (int i = 0;; ++i) {
    const double v = min_db + i * step_db;
    if (v > max_db + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

void ParamRanges::validate() const {
  if (profiles.empty()) throw ConfigError("channel ranges: empty profile set");
  if (!(delay_spread_min_s > 0.0) || delay_spread_max_s < delay_spread_min_s)
    throw ConfigError("channel ranges: invalid delay spread range");
  if (doppler_min_hz < 0.0 || doppler_max_hz < doppler_min_hz)
    throw ConfigError("channel ranges: invalid Doppler range");
  if (snr.max_db < snr.min_db) throw ConfigError("channel ranges: invalid SNR range");
  if (snr.mode == SnrSpec::Mode::Grid && snr.step_db < 0.0)
    throw ConfigError("channel ranges: negative SNR step");
}

ChannelParams sample_params(Rng& rng, const ParamRanges& ranges) {
  ranges.validate();
  ChannelParams p;
  p.profile = ranges.profiles[rng.uniform_index(ranges.profiles.size())];
  p.delay_spread_s = rng.uniform(ranges.delay_spread_min_s, ranges.delay_spread_max_s);
  p.doppler_hz = rng.uniform(ranges.doppler_min_hz, ranges.doppler_max_hz);
  if (ranges.snr.mode == SnrSpec::Mode::Grid) {
    const auto values = ranges.snr.grid_values();
    p.snr_db = values[rng.uniform_index(values.size())];
  } else {
    p.snr_db = rng.uniform(ranges.snr.min_db, ranges.snr.max_db);
  }
  p.seed = rng.next_u64();
  return p;
}

double symbol_time_s(const GridConfig& config, std::uint32_t n) {
  // Slot length scales with numerology: 1 ms at 15 kHz, 0.5 ms at 30 kHz.
  const double slot_s = 1e-3 * 15e3 / config.scs_hz;
  const double symbol_s = slot_s / config.num_symbols;
  return (n + 0.5) * symbol_s;
}

double subcarrier_freq_hz(const GridConfig& config, std::uint32_t m) {
  return (static_cast<double>(m) - config.num_subcarriers() / 2.0) * config.scs_hz;
}

std::vector<cdouble> tap_gains(const ChannelParams& params, std::span<const double> times_s) {
  const auto& prof = tdl_profile(params.profile);
  const auto powers = prof.normalized_powers();
  const std::size_t taps = powers.size();
  std::vector<cdouble> g(taps * times_s.size());
  Rng rng(params.seed);
  const double wd = kTwoPi * params.doppler_hz;
  for (std::size_t l = 0; l < taps; ++l) {
    std::array<double, kSinusoidsPerTap> doppler{};
    std::array<double, kSinusoidsPerTap> phase{};
    for (int s = 0; s < kSinusoidsPerTap; ++s) {
      doppler[s] = wd * std::cos(kTwoPi * rng.uniform());
      phase[s] = kTwoPi * rng.uniform();
    }
    const double amp = std::sqrt(powers[l] / kSinusoidsPerTap);
    for (std::size_t t = 0; t < times_s.size(); ++t) {
      cdouble acc{};
      for (int s = 0; s < kSinusoidsPerTap; ++s) acc += std::polar(1.0, doppler[s] * times_s[t] + phase[s]);
      g[l * times_s.size() + t] = amp * acc;
    }
  }
  return g;
}

ChannelRealization synth_channel(const ChannelParams& params, const GridConfig& config) {
  const auto& prof = tdl_profile(params.profile);
  const std::uint32_t M = config.num_subcarriers();
  const std::uint32_t N = config.num_symbols;
  std::vector<double> times(N);
  for (std::uint32_t n = 0; n < N; ++n) times[n] = symbol_time_s(config, n);
  const auto g = tap_gains(params, times);

  ChannelRealization ch;
  ch.params = params;
  ch.sigma2 = params.sigma2();
  ch.h_true = ResourceGrid(M, N);
  const std::size_t taps = prof.normalized_delays.size();
  for (std::size_t l = 0; l < taps; ++l) {
    const double tau = prof.normalized_delays[l] * params.delay_spread_s;
    const cdouble* gl = &g[l * N];
    for (std::uint32_t m = 0; m < M; ++m) {
      const cdouble phasor = std::polar(1.0, -kTwoPi * subcarrier_freq_hz(config, m) * tau);
      for (std::uint32_t n = 0; n < N; ++n) ch.h_true(m, n) += gl[n] * phasor;
    }
  }
  return ch;
}

ResourceGrid apply_channel(const ResourceGrid& tx, const ChannelRealization& ch, Rng& rng) {
  if (tx.num_subcarriers() != ch.h_true.num_subcarriers() ||
      tx.num_symbols() != ch.h_true.num_symbols()) {
    throw ConfigError("apply_channel: grid shape does not match the channel");
  }
  ResourceGrid y(tx.num_subcarriers(), tx.num_symbols());
  auto out = y.flat();
  const auto x = tx.flat();
  const auto h = ch.h_true.flat();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h[i] * x[i];
  if (ch.sigma2 > 0.0) {
    for (auto& v : out) v += rng.complex_normal(ch.sigma2);
  }
  return y;
}

}  // namespace gnce
