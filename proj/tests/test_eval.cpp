// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>

#include "doctest.h"

#include "gnce/error.hpp"
#include "gnce/chansim.hpp"
#include "gnce/eval.hpp"
#include "gnce/rng.hpp"

using namespace gnce;

namespace {

std::array<std::uint8_t, 4> bits_of(int k) {
  return {std::uint8_t(k >> 3 & 1), std::uint8_t(k >> 2 & 1), std::uint8_t(k >> 1 & 1), std::uint8_t(k & 1)};
}

cdouble point(int k) {
  const auto b = bits_of(k);
  return qam16_map(b)[0];
}

/// Records every observation it is handed, keyed by the LS grid.
class RecordingEstimator final : public Estimator {
 public:
  explicit RecordingEstimator(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  FullEstimate estimate(const Observation& obs) const override {
    std::lock_guard lock(mu_);
    double sum = 0.0;
    for (const auto v : obs.ls_interpolated.flat()) sum += v.real() * 3.0 + v.imag();
    seen_.insert(sum);
    return {obs.ls_interpolated, std::nullopt};
  }
  std::multiset<double> seen() const { return seen_; }

 private:
  std::string name_;
  mutable std::mutex mu_;
  mutable std::multiset<double> seen_;
};

class ZeroEstimator final : public Estimator {
 public:
  std::string name() const override { return "zero"; }
  FullEstimate estimate(const Observation& obs) const override {
    return {ResourceGrid(*obs.config), 0.0};
  }
};

GridConfig small_grid() { return make_grid_config(2, {2, 11}, {0, 1, 6, 7}); }

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("16QAM levels follow the Gray rule and have unit energy") {
  double energy = 0.0;
  std::set<std::pair<double, double>> distinct;
  for (int k = 0; k < 16; ++k) {
    const auto b = bits_of(k);
    const double i = (1 - 2 * b[0]) * (2 - (1 - 2 * b[2]));
    const double q = (1 - 2 * b[1]) * (2 - (1 - 2 * b[3]));
    const cdouble s = point(k);
    CHECK(s.real() == doctest::Approx(i / std::sqrt(10.0)).epsilon(1e-15));
    CHECK(s.imag() == doctest::Approx(q / std::sqrt(10.0)).epsilon(1e-15));
    energy += std::norm(s);
    distinct.insert({s.real(), s.imag()});
    CHECK(qam16_demap(s) == b);
  }
  CHECK(energy / 16 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(distinct.size() == 16);
  // Gray: horizontal and vertical neighbours differ in exactly one bit.
  for (int a = 0; a < 16; ++a)
    for (int c = 0; c < 16; ++c) {
      const double d = std::abs(point(a) - point(c)) * std::sqrt(10.0);
      if (std::abs(d - 2.0) < 1e-9) CHECK(std::popcount(unsigned(a ^ c)) == 1);
    }
  const std::uint8_t three[3] = {0, 1, 0};
  CHECK_THROWS_AS(qam16_map(three), ConfigError);
}

TEST_CASE("demapping picks the nearest point") {
  Rng rng(5);
  for (int t = 0; t < 5000; ++t) {
    const cdouble s{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    int best = 0;
    for (int k = 1; k < 16; ++k)
      if (std::abs(s - point(k)) < std::abs(s - point(best))) best = k;
    CHECK(qam16_demap(s) == bits_of(best));
  }
  // 0.9+0.9j in units of 1/sqrt(10) rounds to the inner corner (1+1j).
  CHECK(qam16_demap(cdouble(0.9, 0.9) / std::sqrt(10.0)) == bits_of(0));
}

TEST_CASE("MMSE equalizer") {
  CHECK(mmse_equalize({2.0, 0.0}, {1.0, 0.0}, 0.0) == cdouble(2.0, 0.0));
  CHECK(mmse_equalize({0.0, 1.0}, {0.0, 1.0}, 1.0) == cdouble(0.5, 0.0));
  CHECK(mmse_equalize({1.0, 1.0}, {0.0, 0.0}, 0.0) == cdouble(0.0, 0.0));
  CHECK_THROWS_AS(mmse_equalize({1.0, 0.0}, {1.0, 0.0}, -1.0), ConfigError);
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    const cdouble y = rng.complex_normal(1.0), h = rng.complex_normal(1.0);
    const double s2 = rng.uniform(0.0, 2.0);
    const double hr = h.real(), hi = h.imag(), yr = y.real(), yi = y.imag();
    const double den = hr * hr + hi * hi + s2;
    const cdouble ref{(hr * yr + hi * yi) / den, (hr * yi - hi * yr) / den};
    CHECK(std::abs(mmse_equalize(y, h, s2) - ref) < 1e-12);
  }
}

TEST_CASE("an all-zero estimate fails every block") {
  BlerConfig cfg;
  cfg.snr_points = {10.0, 30.0};
  cfg.blocks_per_snr = 10;
  const ZeroEstimator zero;
  const Estimator* ests[] = {&zero};
  const auto r = run_bler_detailed(cfg, small_grid(), ests);
  CHECK(r.curves[0].bler() == std::vector<double>{1.0, 1.0});
}

TEST_CASE("oracle estimates are error-free on a benign high-SNR channel") {
  // A nearly flat channel fades as a whole, so 20 dB still loses ~20% of blocks
  // to deep fades; at 50 dB that needs |h|^2 below ~2e-4.
  BlerConfig cfg;
  cfg.snr_points = {50.0};
  cfg.blocks_per_snr = 100;
  cfg.scenario = {TdlName::A, 3e-9, 5.0};
  const OracleEstimator oracle;
  const Estimator* ests[] = {&oracle};
  CHECK(run_bler_detailed(cfg, GridConfig{}, ests).curves[0].bler(0) == 0.0);
}

TEST_CASE("oracle block errors follow the per-RE fading at 20 dB") {
  // On a nearly flat slot the whole block fades together, so even perfect
  // CSI loses the blocks in deep fades. Predict each block from the exact
  // 16QAM error probability of the biased MMSE decision on every data RE.
  BlerConfig cfg;
  cfg.snr_points = {20.0};
  cfg.blocks_per_snr = 100;
  cfg.scenario = {TdlName::A, 3e-9, 5.0};
  const GridConfig grid;
  const OracleEstimator oracle;
  const Estimator* ests[] = {&oracle};
  const auto r = run_bler_detailed(cfg, grid, ests);
  const auto mask = pilot_mask(grid);
  const double sigma2 = std::pow(10.0, -2.0);
  const double a = 1.0 / std::sqrt(10.0);
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  int agree = 0, predicted_errors = 0;
  for (std::uint32_t b = 0; b < cfg.blocks_per_snr; ++b) {
    const auto ch = synth_channel({TdlName::A, 3e-9, 5.0, 20.0, derive_seed(cfg.seed, b)}, grid);
    double expected_errors = 0.0;
    std::size_t data = 0;
    for (std::uint32_t m = 0; m < grid.num_subcarriers(); ++m)
      for (std::uint32_t n = 0; n < grid.num_symbols; ++n) {
        if (mask[std::size_t{m} * grid.num_symbols + n]) continue;
        const double g = std::norm(ch.h_true(m, n));
        const double c = g / (g + sigma2);
        const double sd = c * std::sqrt(sigma2 / (2.0 * g));
        // Per dimension: levels 1a and 3a (by symmetry), boundaries 0 and 2a.
        const double p_inner = phi((2 * a - c * a) / sd) - phi((0 - c * a) / sd);
        const double p_outer = 1.0 - phi((2 * a - 3 * c * a) / sd);
        const double p_dim = 0.5 * (p_inner + p_outer);
        expected_errors += 1.0 - p_dim * p_dim;
        ++data;
      }
    const bool predicted = expected_errors / double(data) > cfg.ser_threshold;
    predicted_errors += predicted;
    agree += predicted == r.curves[0].blocks[0][b].block_error;
  }
  CHECK(agree >= 97);
  MESSAGE("oracle BLER " << r.curves[0].bler(0) << ", predicted " << predicted_errors / 100.0);
  CHECK(std::abs(r.curves[0].bler(0) - predicted_errors / 100.0) <= 0.03);
}

TEST_CASE("estimators see identical observations") {
  BlerConfig cfg;
  cfg.snr_points = {0.0, 10.0};
  cfg.blocks_per_snr = 6;
  cfg.threads = 3;
  const RecordingEstimator a("a"), b("b");
  const Estimator* ests[] = {&a, &b};
  const auto r = run_bler_detailed(cfg, small_grid(), ests);
  CHECK(a.seen() == b.seen());
  CHECK(a.seen().size() == 12);
  CHECK(r.curves[0].bler() == r.curves[1].bler());
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t k = 0; k < 6; ++k)
      CHECK(r.curves[0].blocks[s][k].symbol_errors == r.curves[1].blocks[s][k].symbol_errors);
}

TEST_CASE("BLER results do not depend on the thread count") {
  BlerConfig cfg;
  cfg.snr_points = {5.0, 15.0};
  cfg.blocks_per_snr = 8;
  const LsLiEstimator ls;
  const PracticalEstimator pr;
  const Estimator* ests[] = {&ls, &pr};
  cfg.threads = 1;
  const auto one = format_csv(run_bler(cfg, small_grid(), ests));
  cfg.threads = 4;
  CHECK(format_csv(run_bler(cfg, small_grid(), ests)) == one);
}

TEST_CASE("block errors use the SER threshold") {
  BlockOutcome o{5, 100, false};
  CHECK(o.ser() == 0.05);
  BlerCurve c{"x", {0.0}, {{{5, 100, false}, {6, 100, true}, {0, 100, false}, {50, 100, true}}}};
  CHECK(c.bler(0) == 0.5);
}

TEST_CASE("BLER config validation") {
  BlerConfig cfg;
  cfg.snr_points = {0.0};
  CHECK_NOTHROW(cfg.validate());
  cfg.blocks_per_snr = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.blocks_per_snr = 1;
  cfg.snr_points.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.snr_points = {0.0};
  cfg.ser_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("CSV layout") {
  EvalReport empty;
  CHECK(format_csv(empty) == "estimator,snr_db,metric,value,count\n");
  EvalReport r;
  r.rows = {{"practical", 10, "mse", 0.25, 3}, {"ls", 10, "mse", 0.5, 3}, {"ls", -5, "mse", 1.0, 3},
            {"ls", 0, "bler", std::numeric_limits<double>::quiet_NaN(), 0}};
  CHECK(format_csv(r) ==
        "estimator,snr_db,metric,value,count\n"
        "ls,0,bler,nan,0\n"
        "ls,-5,mse,1,3\n"
        "ls,10,mse,0.5,3\n"
        "practical,10,mse,0.25,3\n");
  CHECK(format_csv(r) == format_csv(r));
}

TEST_CASE("default SNR sweep produces one row per estimator and point") {
  BlerConfig cfg;
  cfg.snr_points.clear();
  for (int s = 0; s <= 30; s += 3) cfg.snr_points.push_back(s);
  BlerResult res;
  for (const auto* n : {"ls", "practical", "graphnet", "oracle"}) {
    BlerCurve c{n, cfg.snr_points, {}};
    c.blocks.assign(cfg.snr_points.size(), std::vector<BlockOutcome>(2));
    res.curves.push_back(c);
  }
  const auto csv = format_csv(bler_report(res));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 11);
}

TEST_CASE("Spearman rank correlation") {
  const double x[] = {1, 2, 3, 4, 5};
  const double down[] = {9, 7, 5, 3, 1};
  CHECK(spearman(x, down) == doctest::Approx(-1.0));
  // Ties get average ranks: y ranks are 1.5, 1.5, 3, 4, 5.
  const double tied[] = {0.5, 0.5, 0.7, 0.8, 0.9};
  const double rx[] = {1, 2, 3, 4, 5}, ry[] = {1.5, 1.5, 3, 4, 5};
  double mx = 3, my = 3, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  CHECK(spearman(x, tied) == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-14));
  const double flat[] = {1, 1, 1, 1, 1};
  CHECK(std::isnan(spearman(x, flat)));
}

TEST_CASE("estimator factory") {
  for (const auto* n : {"ls", "practical", "oracle"}) CHECK(make_estimator(n, {})->name() == n);
  CHECK_THROWS_AS(make_estimator("chnet", {}), ConfigError);
  CHECK_THROWS_AS(make_estimator("graphnet", {}), ConfigError);
}

}  // TEST_SUITE
