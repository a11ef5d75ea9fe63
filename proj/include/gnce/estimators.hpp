// SPDX-License-Identifier: Apache-2.0
//
// Classical channel estimators: LS at the pilots, separable 2D linear
// interpolation, and a practical estimator that denoises the pilot
// observations in the delay domain before interpolating.
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnce/grid.hpp"

namespace gnce {

/// Channel estimates at the pilot REs, aligned with PilotPattern order.
struct SparseEstimate {
  std::vector<GridPos> positions;
  std::vector<cdouble> values;
};

struct FullEstimate {
  ResourceGrid h_est;
  std::optional<double> sigma2_est;
};

/// h = conj(p) * y / |p|^2 per pilot. Throws ConfigError on a zero pilot.
SparseEstimate ls_at_pilots(const ResourceGrid& received, const PilotPattern& pilots);

/// Piecewise-linear interpolation on the true pilot subcarriers of every
/// DM-RS symbol, then linear in time between DM-RS symbols. Values beyond
/// the first/last pilot are held. Pilot REs reproduce the input exactly.
FullEstimate interpolate_2d(const SparseEstimate& sparse, const GridConfig& config);

struct PracticalOptions {
  double kappa = 3.0;               // keep delay bins with power >= kappa * floor
  double window_fraction = 0.25;    // leading delay bins eligible to survive
  double noise_fraction = 0.25;     // trailing delay bins that define the floor
};

struct DenoisedPilots {
  std::vector<cdouble> values;
  double removed_energy = 0.0;
};

/// Delay-domain gating of one DM-RS symbol's pilot vector (unitary DFT pair).
DenoisedPilots cir_denoise(std::span<const cdouble> pilot_freq, const PracticalOptions& opts);

/// Practical estimator starting from LS pilot values.
FullEstimate practical_from_ls(const SparseEstimate& ls, const GridConfig& config,
                               const PracticalOptions& opts = {});

FullEstimate practical_estimate(const ResourceGrid& received, const PilotPattern& pilots,
                                const GridConfig& config, const PracticalOptions& opts = {});

/// Mean squared error per RE: (1/V) sum |est - truth|^2.
double mse(const ResourceGrid& est, const ResourceGrid& truth);

/// What an estimator may look at for one slot. `truth_*` are populated only
/// for evaluation and are consumed solely by the oracle.
struct Observation {
  const GridConfig* config = nullptr;
  SparseEstimate ls;            // LS at pilots
  ResourceGrid ls_interpolated; // LS + 2D interpolation over the whole grid
  const ResourceGrid* truth_h = nullptr;
  double truth_sigma2 = 0.0;
};

/// Builds the observation for a received grid.
Observation observe(const ResourceGrid& received, const PilotPattern& pilots,
                    const GridConfig& config);

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual FullEstimate estimate(const Observation& obs) const = 0;
};

class LsLiEstimator final : public Estimator {
 public:
  std::string name() const override { return "ls"; }
  FullEstimate estimate(const Observation& obs) const override;
};

class PracticalEstimator final : public Estimator {
 public:
  explicit PracticalEstimator(PracticalOptions opts = {}) : opts_(opts) {}
  std::string name() const override { return "practical"; }
  FullEstimate estimate(const Observation& obs) const override;

 private:
  PracticalOptions opts_;
};

/// Returns the true channel and noise power; throws if the truth is absent.
class OracleEstimator final : public Estimator {
 public:
  std::string name() const override { return "oracle"; }
  FullEstimate estimate(const Observation& obs) const override;
};

}  // namespace gnce
