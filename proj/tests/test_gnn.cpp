// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <filesystem>

#include "doctest.h"

#include "gnn_oracle.hpp"

#include "gnce/binary_io.hpp"
#include "gnce/error.hpp"
#include "gnce/gnn.hpp"
#include "json.hpp"

using namespace gnce;
using namespace gnce::testing;
namespace fs = std::filesystem;

namespace {

const ModelConfig kModes[] = {
    {32, WeightTying::Tied, Aggregation::Mean},
    {32, WeightTying::Tied, Aggregation::Sum},
    {32, WeightTying::Untied, Aggregation::Mean},
    {32, WeightTying::Untied, Aggregation::Sum},
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gnce_test_gnn";
  fs::create_directories(dir);
  return dir / name;
}

/// Random parameters with non-zero biases, so every term is exercised.
ModelParams random_params(Rng& rng, ModelConfig cfg) {
  auto p = init_params(rng.next_u64(), cfg);
  for (auto& t : tensors(p))
    for (Eigen::Index i = 0; i < t.value->size(); ++i) t.value->data()[i] += rng.uniform(-0.2, 0.2);
  return p;
}

}  // namespace

TEST_SUITE("gnn") {

TEST_CASE("parameter accounting") {
  const auto tied = init_params(1);
  CHECK(count_params(tied) == 2307);
  CHECK(payload_bytes(tied).size() == 9228);
  // 2307 plus one extra 32x2, 32x32 and 2x32 neighbour matrix.
  CHECK(count_params(init_params(1, {32, WeightTying::Untied, Aggregation::Mean})) == 2307 + 64 + 1024 + 64);
  std::vector<std::string> names;
  for (const auto& t : tensors(tied)) names.emplace_back(t.name);
  CHECK(names == std::vector<std::string>{"sage1.weight", "sage1.bias", "sage2.weight", "sage2.bias",
                                          "sage3.weight", "sage3.bias", "noise.fc1.weight",
                                          "noise.fc1.bias", "noise.fc2.weight", "noise.fc2.bias"});
}

TEST_CASE("initialization is seeded and bounded by 1/sqrt(fan_in)") {
  const auto a = init_params(5), b = init_params(5), c = init_params(6);
  CHECK(payload_bytes(a) == payload_bytes(b));
  CHECK(payload_bytes(a) != payload_bytes(c));
  for (const auto& t : tensors(a)) {
    if (std::string_view(t.name).ends_with("bias")) {
      CHECK(t.value->isZero(0.0));
    } else {
      CHECK(t.value->cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(double(t.value->cols())));
    }
  }
}

TEST_CASE("forward matches the loop-based reference in all modes") {
  Rng rng(17);
  for (const auto& cfg : kModes) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto g = random_graph(rng, 4, 5);
      const auto p = random_params(rng, cfg);
      const auto x = random_matrix(rng, g.num_nodes(), 2);
      const auto fast = predict(p, x, g);
      const auto slow = naive_forward(p, x, g);
      CHECK((fast.h_hat - slow.h_hat).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(fast.n_hat == doctest::Approx(slow.n_hat).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward matches the reference on the default grid") {
  const auto g = build_graph(make_grid_config(4, {2, 11}, {0, 1, 6, 7}), 3);
  Rng rng(3);
  const auto p = random_params(rng, {});
  const auto x = random_matrix(rng, g.num_nodes(), 2);
  const auto fast = predict(p, x, g);
  const auto slow = naive_forward(p, x, g);
  CHECK((fast.h_hat - slow.h_hat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fast.n_hat == doctest::Approx(slow.n_hat).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(2024);
  const double eps = 1e-5;
  for (const auto& cfg : kModes) {
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      const auto g = random_graph(rng, 4, 3);
      auto p = random_params(rng, cfg);
      const auto x = random_matrix(rng, g.num_nodes(), 2);
      const auto y = random_matrix(rng, g.num_nodes(), 2);
      const double n = rng.uniform(0.0, 2.0);
      const LossWeights w{rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)};
      const auto grad = backward(p, forward(p, x, g), x, g, y, n, w);
      auto pt = tensors(p);
      const auto gt = tensors(grad);
      for (std::size_t t = 0; t < pt.size(); ++t)
        for (Eigen::Index i = 0; i < pt[t].value->size(); ++i) {
          double& v = pt[t].value->data()[i];
          const double keep = v;
          v = keep + eps;
          const double up = loss(predict(p, x, g), y, n, w).total;
          v = keep - eps;
          const double down = loss(predict(p, x, g), y, n, w).total;
          v = keep;
          const double fd = (up - down) / (2 * eps);
          const double an = gt[t].value->data()[i];
          const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
          worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("relabelling nodes permutes the output") {
  Rng rng(8);
  for (const auto& cfg : kModes) {
    const auto g = random_graph(rng, 4, 4);
    const auto p = random_params(rng, cfg);
    const auto x = random_matrix(rng, g.num_nodes(), 2);
    const std::uint32_t V = g.num_nodes();
    std::vector<std::uint32_t> perm(V);  // old -> new
    for (std::uint32_t i = 0; i < V; ++i) perm[i] = (i * 7 + 3) % V;
    GraphTopology h = g;
    std::vector<std::uint32_t> inv(V);
    for (std::uint32_t i = 0; i < V; ++i) inv[perm[i]] = i;
    h.edges.clear();
    for (std::uint32_t j = 0; j < V; ++j)
      for (const Edge& e : g.incoming(inv[j])) h.edges.push_back({perm[e.source], j});
    NodeMatrix xp(V, 2);
    for (std::uint32_t i = 0; i < V; ++i) xp.row(perm[i]) = x.row(i);
    const auto a = predict(p, x, g);
    const auto b = predict(p, xp, h);
    for (std::uint32_t i = 0; i < V; ++i) CHECK((a.h_hat.row(i) - b.h_hat.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.n_hat == doctest::Approx(b.n_hat).epsilon(1e-12));
  }
}

TEST_CASE("loss terms and zero weights") {
  Rng rng(1);
  const auto g = random_graph(rng, 3, 3);
  const auto p = random_params(rng, {});
  const auto x = random_matrix(rng, g.num_nodes(), 2);
  const auto y = random_matrix(rng, g.num_nodes(), 2);
  const auto out = predict(p, x, g);
  const auto l = loss(out, y, 0.5, {2.0, 3.0});
  double ce = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    ce += std::pow(out.h_hat(i, 0) - y(i, 0), 2) + std::pow(out.h_hat(i, 1) - y(i, 1), 2);
  ce /= double(y.rows());
  CHECK(l.ce == doctest::Approx(ce).epsilon(1e-14));
  CHECK(l.noise == doctest::Approx(std::pow(out.n_hat - 0.5, 2)).epsilon(1e-14));
  CHECK(l.total == doctest::Approx(2.0 * ce + 3.0 * l.noise).epsilon(1e-14));
  const auto grad = backward(p, forward(p, x, g), x, g, y, 0.5, {0.0, 0.0});
  for (const auto& t : tensors(grad)) CHECK(t.value->isZero(0.0));
}

TEST_CASE("Adam matches a scalar reference") {
  Rng rng(4);
  auto p = random_params(rng, {8, WeightTying::Untied, Aggregation::Sum});
  const auto start = p;
  AdamOptions o{0.01, 0.8, 0.95, 1e-6};
  auto state = make_adam(p, o);
  std::vector<ModelParams> grads;
  for (int s = 0; s < 4; ++s) {
    auto g = zeros_like(p);
    for (auto& t : tensors(g))
      for (Eigen::Index i = 0; i < t.value->size(); ++i) t.value->data()[i] = rng.uniform(-1.0, 1.0);
    grads.push_back(g);
    adam_step(state, p, g);
  }
  const auto pt = tensors(p);
  const auto st = tensors(start);
  for (std::size_t t = 0; t < pt.size(); ++t)
    for (Eigen::Index i = 0; i < pt[t].value->size(); ++i) {
      double theta = st[t].value->data()[i], m = 0.0, v = 0.0;
      for (int s = 0; s < 4; ++s) {
        const double gi = tensors(grads[s])[t].value->data()[i];
        m = o.beta1 * m + (1 - o.beta1) * gi;
        v = o.beta2 * v + (1 - o.beta2) * gi * gi;
        const double mh = m / (1 - std::pow(o.beta1, s + 1));
        const double vh = v / (1 - std::pow(o.beta2, s + 1));
        theta -= o.lr * mh / (std::sqrt(vh) + o.eps);
      }
      CHECK(pt[t].value->data()[i] == doctest::Approx(theta).epsilon(1e-12));
    }
  CHECK(state.step == 4);
  // A zero learning rate leaves the parameters untouched.
  auto q = start;
  auto frozen = make_adam(q, {0.0});
  adam_step(frozen, q, grads[0]);
  CHECK(payload_bytes(q) == payload_bytes(start));
}

TEST_CASE("zero parameters predict zero noise") {
  const auto g = build_graph(make_grid_config(1, {2}, {0}), 3);
  auto p = zeros_like(init_params(1));
  Rng rng(1);
  CHECK(predict(p, random_matrix(rng, g.num_nodes(), 2), g).n_hat == 0.0);
}

TEST_CASE("non-finite activations name the layer") {
  Rng rng(1);
  const auto g = random_graph(rng, 3, 3);
  const auto p = random_params(rng, {});
  auto x = random_matrix(rng, g.num_nodes(), 2);
  x(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(predict(p, x, g), doctest::Contains("sage1"), NumericError);
  CHECK_THROWS_AS(predict(p, random_matrix(rng, g.num_nodes(), 3), g), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(12);
  for (const auto& cfg : kModes) {
    const auto g = build_graph(make_grid_config(2, {2, 11}, {0, 6}), 3);
    const Checkpoint ck{random_params(rng, cfg), meta_for(cfg, NoiseScale::Db, g)};
    const auto path = scratch("ck.json");
    save_checkpoint(ck, path);
    const auto back = load_checkpoint(path);
    CHECK(back.meta == ck.meta);
    CHECK(payload_bytes(back.params) == payload_bytes(ck.params));
    CHECK(payload_bytes(round_to_payload(ck.params)) == payload_bytes(ck.params));
    const auto rounded = round_to_payload(ck.params);
    const auto bt = tensors(back.params);
    const auto rt = tensors(rounded);
    for (std::size_t t = 0; t < bt.size(); ++t) CHECK(*bt[t].value == *rt[t].value);
    CHECK(fs::file_size(payload_path_for(path)) == count_params(ck.params) * 4);
    const auto first = io::read_text_file(path) + io::read_text_file(payload_path_for(path));
    save_checkpoint(back, path);
    CHECK(io::read_text_file(path) + io::read_text_file(payload_path_for(path)) == first);
    CHECK_NOTHROW(require_compatible(back.meta, g));
    CHECK_THROWS_AS(require_compatible(back.meta, build_graph(GridConfig{}, 3)), DataError);
  }
}

TEST_CASE("default checkpoint payload is 9228 bytes and little-endian float32") {
  const auto p = init_params(3);
  const auto path = scratch("default.json");
  save_checkpoint({p, meta_for({}, NoiseScale::LinearPower, build_graph(GridConfig{}, 3))}, path);
  CHECK(fs::file_size(payload_path_for(path)) == 9228);
  const auto bytes = io::read_text_file(payload_path_for(path));
  const float first = static_cast<float>(p.sage1.weight(0, 0));
  std::uint32_t bits;
  std::memcpy(&bits, &first, 4);
  for (int b = 0; b < 4; ++b) CHECK(static_cast<unsigned char>(bytes[b]) == ((bits >> (8 * b)) & 0xff));
  const auto manifest = nlohmann::json::parse(io::read_text_file(path));
  CHECK(manifest["payload_bytes"] == 9228);
  CHECK(manifest["tensors"].size() == 10);
  CHECK(manifest["model"]["weight_tying"] == "tied");
}

TEST_CASE("corrupt checkpoints are data errors") {
  const auto p = init_params(3);
  const auto g = build_graph(make_grid_config(1, {2}, {0}), 3);
  const auto path = scratch("bad.json");
  save_checkpoint({p, meta_for({}, NoiseScale::LinearPower, g)}, path);
  const auto payload = io::read_text_file(payload_path_for(path));
  const auto manifest = io::read_text_file(path);

  io::write_text_file(payload_path_for(path), payload.substr(0, 100));
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  io::write_text_file(payload_path_for(path), payload);

  auto j = nlohmann::json::parse(manifest);
  j["tensors"][2]["shape"] = {16, 32};
  io::write_text_file(path, j.dump());
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  j = nlohmann::json::parse(manifest);
  j["version"] = 99;
  io::write_text_file(path, j.dump());
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  io::write_text_file(path, "{not json");
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  CHECK_THROWS_AS(load_checkpoint(scratch("absent.json")), DataError);
}

TEST_CASE("graphnet estimator runs the model on the interpolated grid") {
  const auto c = make_grid_config(2, {2, 11}, {0, 1, 6, 7});
  const auto g = build_graph(c, 3);
  Rng rng(6);
  const auto p = random_params(rng, {});
  Observation obs;
  obs.config = &c;
  obs.ls_interpolated = ResourceGrid(c);
  for (auto& v : obs.ls_interpolated.flat()) v = rng.complex_normal(1.0);
  const GraphNetEstimator est({p, meta_for({}, NoiseScale::Db, g)}, g);
  const auto out = est.estimate(obs);
  const auto ref = predict(p, features_from_grid(obs.ls_interpolated, g), g);
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) {
    const auto pos = g.node_to_grid[i];
    CHECK(out.h_est.at(pos) == cdouble(ref.h_hat(i, 0), ref.h_hat(i, 1)));
  }
  REQUIRE(out.sigma2_est.has_value());
  CHECK(*out.sigma2_est == doctest::Approx(std::pow(10.0, ref.n_hat / 10.0)));
  CHECK(est.name() == "graphnet");
  const GraphNetEstimator zf({p, meta_for({}, NoiseScale::Db, g)}, g, false);
  CHECK(zf.name() == "graphnet_zf");
  CHECK_FALSE(zf.estimate(obs).sigma2_est.has_value());
  CHECK_THROWS_AS(GraphNetEstimator({p, meta_for({}, NoiseScale::Db, build_graph(c, 2))}, g), DataError);
}

TEST_CASE("noise scale conversions") {
  CHECK(noise_target(0.1, NoiseScale::Db) == doctest::Approx(-10.0));
  CHECK(noise_to_linear(-10.0, NoiseScale::Db) == doctest::Approx(0.1));
  CHECK(noise_target(0.1, NoiseScale::LinearPower) == 0.1);
  CHECK_THROWS_AS(noise_target(0.0, NoiseScale::Db), ConfigError);
  CHECK(parse_noise_scale("db") == NoiseScale::Db);
  CHECK_THROWS_AS(parse_aggregation("max"), ConfigError);
}

}  // TEST_SUITE
