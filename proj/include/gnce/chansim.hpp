// SPDX-License-Identifier: Apache-2.0
//
// TDL fading channels evaluated per resource element in the frequency
// domain, plus the AWGN model y = h * x + w.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gnce/grid.hpp"
#include "gnce/rng.hpp"

namespace gnce {

enum class TdlName { A, B, C, D, E };

std::string_view to_string(TdlName name);
/// Accepts "TDL-A" ... "TDL-E"; throws ConfigError otherwise.
TdlName parse_tdl_name(std::string_view text);
std::vector<TdlName> all_tdl_names();

struct TdlProfile {
  TdlName name = TdlName::A;
  std::vector<double> normalized_delays;
  std::vector<double> tap_powers_db;

  /// Linear tap powers scaled to sum to one.
  std::vector<double> normalized_powers() const;
};

/// Parses the "profile,tap,normalized_delay,power_db" table format.
std::vector<TdlProfile> parse_tdl_table(std::string_view csv);
/// The bundled tap table (data/tdl_profiles.csv) as compiled in.
std::string_view bundled_tdl_table();
const TdlProfile& tdl_profile(TdlName name);

/// Number of sinusoids in every tap's sum-of-sinusoids fading process.
inline constexpr int kSinusoidsPerTap = 32;

struct ChannelParams {
  TdlName profile = TdlName::A;
  double delay_spread_s = 100e-9;
  double doppler_hz = 5.0;
  double snr_db = 10.0;
  std::uint64_t seed = 0;

  /// Per-RE noise power for unit signal power.
  double sigma2() const;
};

struct SnrSpec {
  enum class Mode { Grid, Uniform };
  Mode mode = Mode::Grid;
  double min_db = -5.0;
  double max_db = 19.0;
  double step_db = 2.0;

  /// The discrete SNR values in Grid mode.
  std::vector<double> grid_values() const;
};

struct ParamRanges {
  std::vector<TdlName> profiles = all_tdl_names();
  double delay_spread_min_s = 1e-9;
  double delay_spread_max_s = 300e-9;
  double doppler_min_hz = 5.0;
  double doppler_max_hz = 250.0;
  SnrSpec snr;

  void validate() const;
};

/// Uniform draws over the configured ranges; the returned seed is drawn too.
ChannelParams sample_params(Rng& rng, const ParamRanges& ranges);

struct ChannelRealization {
  ResourceGrid h_true;
  double sigma2 = 0.0;
  ChannelParams params;
};

/// Start time of the slot plus the midpoint of symbol n.
double symbol_time_s(const GridConfig& config, std::uint32_t n);
/// Subcarrier frequency relative to the band centre.
double subcarrier_freq_hz(const GridConfig& config, std::uint32_t m);

/// Complex gain of every tap (rows) at every requested time (columns),
/// row-major. Tap l has power p_l; the processes are drawn from params.seed.
std::vector<cdouble> tap_gains(const ChannelParams& params, std::span<const double> times_s);

/// h[m, n] = sum_l g_l(t_n) exp(-j 2 pi f_m tau_l).
ChannelRealization synth_channel(const ChannelParams& params, const GridConfig& config);

/// y = h .* x + w with w ~ CN(0, sigma2).
ResourceGrid apply_channel(const ResourceGrid& tx, const ChannelRealization& ch, Rng& rng);

}  // namespace gnce
