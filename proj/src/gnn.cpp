// SPDX-License-Identifier: Apache-2.0
#include "gnce/gnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gnce/binary_io.hpp"
#include "gnce/error.hpp"
#include "gnce/rng.hpp"

namespace gnce {

namespace {

constexpr std::uint32_t kInFeatures = 2;
constexpr std::uint32_t kOutFeatures = 2;

template <class E>
E parse_enum(std::string_view s, std::initializer_list<std::pair<std::string_view, E>> table,
             std::string_view what) {
  for (const auto& [name, v] : table)
    if (name == s) return v;
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <class P>
auto collect_tensors(P& p) {
  using M = std::conditional_t<std::is_const_v<P>, const Eigen::MatrixXd, Eigen::MatrixXd>;
  std::vector<BasicTensorRef<M>> out;
  const bool untied = p.config.tying == WeightTying::Untied;
  auto layer = [&](auto& l, std::string_view w, std::string_view wn, std::string_view b) {
    out.push_back({w, &l.weight});
    if (untied) out.push_back({wn, &l.weight_neighbor});
    out.push_back({b, &l.bias});
  };
  layer(p.sage1, "sage1.weight", "sage1.weight_neighbor", "sage1.bias");
  layer(p.sage2, "sage2.weight", "sage2.weight_neighbor", "sage2.bias");
  layer(p.sage3, "sage3.weight", "sage3.weight_neighbor", "sage3.bias");
  out.push_back({"noise.fc1.weight", &p.noise_fc1_weight});
  out.push_back({"noise.fc1.bias", &p.noise_fc1_bias});
  out.push_back({"noise.fc2.weight", &p.noise_fc2_weight});
  out.push_back({"noise.fc2.bias", &p.noise_fc2_bias});
  return out;
}

/// Shapes of every tensor for a given config, in tensors() order.
ModelParams shaped(const ModelConfig& config) {
  if (config.hidden == 0) throw ConfigError("model.hidden must be positive");
  const Eigen::Index F = config.hidden;
  ModelParams p;
  p.config = config;
  const bool untied = config.tying == WeightTying::Untied;
  auto layer = [&](SageLayer& l, Eigen::Index out, Eigen::Index in) {
    l.weight = Eigen::MatrixXd::Zero(out, in);
    if (untied) l.weight_neighbor = Eigen::MatrixXd::Zero(out, in);
    l.bias = Eigen::MatrixXd::Zero(out, 1);
  };
  layer(p.sage1, F, kInFeatures);
  layer(p.sage2, F, F);
  layer(p.sage3, kOutFeatures, F);
  p.noise_fc1_weight = Eigen::MatrixXd::Zero(F, F);
  p.noise_fc1_bias = Eigen::MatrixXd::Zero(F, 1);
  p.noise_fc2_weight = Eigen::MatrixXd::Zero(1, F);
  p.noise_fc2_bias = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

bool is_bias(std::string_view name) { return name.ends_with(".bias"); }

void check_finite(const auto& m, std::string_view layer) {
  // NaN and Inf propagate through the sum; much cheaper than allFinite().
  if (!std::isfinite(m.sum())) throw NumericError("non-finite activation in " + std::string(layer));
}

constexpr Eigen::Index kBlockRows = 256;

double aggregation_scale(const GraphTopology& g, Aggregation mode) {
  return mode == Aggregation::Mean ? 1.0 / g.in_degree : 1.0;
}

/// Rows [r0, r0 + nb) of the aggregated features into `out`.
void aggregate_rows(const NodeMatrix& x, const GraphTopology& g, double scale, Eigen::Index r0,
                    Eigen::Index nb, NodeMatrix& out) {
  out.setZero(nb, x.cols());
  for (Eigen::Index r = 0; r < nb; ++r) {
    auto row = out.row(r);
    for (const Edge& e : g.incoming(static_cast<std::uint32_t>(r0 + r))) row += x.row(e.source);
  }
  if (scale != 1.0) out *= scale;
}

/// d_x[source] += scale * d_agg[target] for the targets in rows [r0, r0 + nb).
void scatter_rows(const NodeMatrix& d_agg, const GraphTopology& g, double scale, Eigen::Index r0,
                  NodeMatrix& d_x) {
  for (Eigen::Index r = 0; r < d_agg.rows(); ++r)
    for (const Edge& e : g.incoming(static_cast<std::uint32_t>(r0 + r)))
      d_x.row(e.source) += scale * d_agg.row(r);
}

// Layers run over blocks of rows so the aggregate and pre-activation stay in
// cache instead of materializing V x F temporaries.
NodeMatrix sage_forward(const SageLayer& l, const NodeMatrix& x, const GraphTopology& g,
                        Aggregation mode, bool tied, bool relu) {
  const Eigen::Index V = x.rows();
  const double scale = aggregation_scale(g, mode);
  const Eigen::MatrixXd wt = l.weight.transpose();
  const Eigen::MatrixXd wnt = tied ? Eigen::MatrixXd() : Eigen::MatrixXd(l.weight_neighbor.transpose());
  const Eigen::RowVectorXd b = l.bias.col(0).transpose();
  NodeMatrix z(V, l.weight.rows());
  NodeMatrix agg;
  for (Eigen::Index r0 = 0; r0 < V; r0 += kBlockRows) {
    const Eigen::Index nb = std::min(kBlockRows, V - r0);
    aggregate_rows(x, g, scale, r0, nb, agg);
    auto zb = z.middleRows(r0, nb);
    if (tied) {
      agg += x.middleRows(r0, nb);
      zb.noalias() = agg * wt;
    } else {
      zb.noalias() = x.middleRows(r0, nb) * wt;
      zb.noalias() += agg * wnt;
    }
    zb.rowwise() += b;
    if (relu) zb = zb.cwiseMax(0.0);
  }
  return z;
}

/// Accumulates the layer gradient and returns d_x (empty when not needed).
NodeMatrix sage_backward(const SageLayer& l, SageLayer& grad, const NodeMatrix& x,
                         const NodeMatrix& dz, const GraphTopology& g, Aggregation mode, bool tied,
                         bool need_dx) {
  const Eigen::Index V = x.rows();
  const double scale = aggregation_scale(g, mode);
  grad.bias = dz.colwise().sum().transpose();
  NodeMatrix dx;
  if (need_dx) dx.setZero(V, x.cols());
  NodeMatrix agg, ds;
  for (Eigen::Index r0 = 0; r0 < V; r0 += kBlockRows) {
    const Eigen::Index nb = std::min(kBlockRows, V - r0);
    aggregate_rows(x, g, scale, r0, nb, agg);
    const auto dzb = dz.middleRows(r0, nb);
    if (tied) {
      agg += x.middleRows(r0, nb);
      grad.weight.noalias() += dzb.transpose() * agg;
      if (!need_dx) continue;
      ds.noalias() = dzb * l.weight;
      dx.middleRows(r0, nb) += ds;
    } else {
      grad.weight.noalias() += dzb.transpose() * x.middleRows(r0, nb);
      grad.weight_neighbor.noalias() += dzb.transpose() * agg;
      if (!need_dx) continue;
      dx.middleRows(r0, nb).noalias() += dzb * l.weight;
      ds.noalias() = dzb * l.weight_neighbor;
    }
    scatter_rows(ds, g, scale, r0, dx);
  }
  return dx;
}

void check_inputs(const ModelParams& p, const NodeMatrix& features, const GraphTopology& g) {
  if (g.in_degree == 0 || g.num_nodes() == 0) throw ConfigError("graph has no edges");
  if (features.rows() != static_cast<Eigen::Index>(g.num_nodes()) ||
      features.cols() != kInFeatures)
    throw ConfigError("features must be " + std::to_string(g.num_nodes()) + " x 2, got " +
                      std::to_string(features.rows()) + " x " + std::to_string(features.cols()));
  if (p.sage1.weight.cols() != kInFeatures ||
      p.sage2.weight.rows() != static_cast<Eigen::Index>(p.config.hidden))
    throw ConfigError("parameter shapes do not match the model config");
}

}  // namespace

std::string_view to_string(WeightTying v) { return v == WeightTying::Tied ? "tied" : "untied"; }
std::string_view to_string(Aggregation v) { return v == Aggregation::Mean ? "mean" : "sum"; }
std::string_view to_string(NoiseScale v) { return v == NoiseScale::LinearPower ? "linear" : "db"; }

WeightTying parse_weight_tying(std::string_view s) {
  return parse_enum<WeightTying>(s, {{"tied", WeightTying::Tied}, {"untied", WeightTying::Untied}},
                                 "weight tying");
}
Aggregation parse_aggregation(std::string_view s) {
  return parse_enum<Aggregation>(s, {{"mean", Aggregation::Mean}, {"sum", Aggregation::Sum}},
                                 "aggregation");
}
NoiseScale parse_noise_scale(std::string_view s) {
  return parse_enum<NoiseScale>(s, {{"linear", NoiseScale::LinearPower}, {"db", NoiseScale::Db}},
                                "noise label scale");
}

std::vector<TensorRef> tensors(ModelParams& p) { return collect_tensors(p); }
std::vector<ConstTensorRef> tensors(const ModelParams& p) { return collect_tensors(p); }

ModelParams init_params(std::uint64_t seed, ModelConfig config) {
  ModelParams p = shaped(config);
  Rng rng(seed);
  for (auto& t : tensors(p)) {
    if (is_bias(t.name)) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.value->cols()));
    // Row-major fill so the draw order matches the payload layout.
    for (Eigen::Index r = 0; r < t.value->rows(); ++r)
      for (Eigen::Index c = 0; c < t.value->cols(); ++c) (*t.value)(r, c) = rng.uniform(-bound, bound);
  }
  return p;
}

ModelParams zeros_like(const ModelParams& p) { return shaped(p.config); }

std::size_t count_params(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& t : tensors(p)) n += static_cast<std::size_t>(t.value->size());
  return n;
}

ForwardTrace forward(const ModelParams& p, const NodeMatrix& features, const GraphTopology& g) {
  check_inputs(p, features, g);
  const bool tied = p.config.tying == WeightTying::Tied;
  const Aggregation mode = p.config.aggregation;
  ForwardTrace t;

  t.h1 = sage_forward(p.sage1, features, g, mode, tied, true);
  check_finite(t.h1, "sage1");
  t.h2 = sage_forward(p.sage2, t.h1, g, mode, tied, true);
  check_finite(t.h2, "sage2");
  t.output.h_hat = sage_forward(p.sage3, t.h2, g, mode, tied, false);
  check_finite(t.output.h_hat, "sage3");

  t.pooled = t.h2.colwise().mean().transpose();
  t.noise_pre = p.noise_fc1_weight * t.pooled + p.noise_fc1_bias.col(0);
  t.noise_hidden = t.noise_pre.cwiseMax(0.0);
  check_finite(t.noise_hidden, "noise.fc1");
  t.output.n_hat = (p.noise_fc2_weight.row(0).dot(t.noise_hidden)) + p.noise_fc2_bias(0, 0);
  if (!std::isfinite(t.output.n_hat)) throw NumericError("non-finite activation in noise.fc2");
  return t;
}

ModelOutput predict(const ModelParams& p, const NodeMatrix& features, const GraphTopology& g) {
  return forward(p, features, g).output;
}

LossTerms loss(const ModelOutput& out, const NodeMatrix& label_h, double label_noise,
               LossWeights w) {
  if (label_h.rows() != out.h_hat.rows() || label_h.cols() != out.h_hat.cols())
    throw ConfigError("label shape does not match model output");
  LossTerms l;
  l.ce = (out.h_hat - label_h).squaredNorm() / static_cast<double>(out.h_hat.rows());
  const double dn = out.n_hat - label_noise;
  l.noise = dn * dn;
  l.total = w.ce * l.ce + w.noise * l.noise;
  return l;
}

ModelParams backward(const ModelParams& p, const ForwardTrace& t, const NodeMatrix& features,
                     const GraphTopology& g, const NodeMatrix& label_h, double label_noise,
                     LossWeights w) {
  check_inputs(p, features, g);
  const auto V = static_cast<Eigen::Index>(g.num_nodes());
  if (t.h1.rows() != V || t.h2.rows() != V || t.output.h_hat.rows() != V ||
      t.h2.cols() != static_cast<Eigen::Index>(p.config.hidden))
    throw ConfigError("forward trace does not match the graph or parameters");
  if (label_h.rows() != V || label_h.cols() != kOutFeatures)
    throw ConfigError("label shape does not match model output");

  const bool tied = p.config.tying == WeightTying::Tied;
  const Aggregation mode = p.config.aggregation;
  ModelParams grad = zeros_like(p);

  NodeMatrix d_out = (2.0 * w.ce / static_cast<double>(V)) * (t.output.h_hat - label_h);
  NodeMatrix d_h2 = sage_backward(p.sage3, grad.sage3, t.h2, d_out, g, mode, tied, true);

  const double dn = 2.0 * w.noise * (t.output.n_hat - label_noise);
  grad.noise_fc2_weight = dn * t.noise_hidden.transpose();
  grad.noise_fc2_bias(0, 0) = dn;
  Eigen::VectorXd d_pre = (p.noise_fc2_weight.row(0).transpose() * dn).array() *
                          (t.noise_pre.array() > 0.0).cast<double>();
  grad.noise_fc1_weight = d_pre * t.pooled.transpose();
  grad.noise_fc1_bias = d_pre;
  Eigen::VectorXd d_pooled = p.noise_fc1_weight.transpose() * d_pre;
  d_h2.rowwise() += (d_pooled / static_cast<double>(V)).transpose();

  d_h2.array() *= (t.h2.array() > 0.0).cast<double>();
  NodeMatrix d_h1 = sage_backward(p.sage2, grad.sage2, t.h1, d_h2, g, mode, tied, true);
  d_h1.array() *= (t.h1.array() > 0.0).cast<double>();
  sage_backward(p.sage1, grad.sage1, features, d_h1, g, mode, tied, false);
  return grad;
}

AdamState make_adam(const ModelParams& params, AdamOptions options) {
  return AdamState{options, 0, zeros_like(params), zeros_like(params)};
}

void adam_step(AdamState& s, ModelParams& params, const ModelParams& grads) {
  if (!(params.config == s.m.config) || !(grads.config == params.config))
    throw ConfigError("Adam state does not match the parameters");
  ++s.step;
  const auto& o = s.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(s.m);
  auto v = tensors(s.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& mi = *m[i].value;
    auto& vi = *v[i].value;
    const auto& gi = *g[i].value;
    mi = o.beta1 * mi + (1.0 - o.beta1) * gi;
    vi = o.beta2 * vi + (1.0 - o.beta2) * gi.cwiseAbs2();
    p[i].value->array() -=
        o.lr * (mi.array() / c1) / ((vi.array() / c2).sqrt() + o.eps);
  }
}

double noise_target(double sigma2, NoiseScale scale) {
  if (scale == NoiseScale::LinearPower) return sigma2;
  if (!(sigma2 > 0.0)) throw ConfigError("dB noise labels need a positive noise power");
  return 10.0 * std::log10(sigma2);
}

double noise_to_linear(double n_hat, NoiseScale scale) {
  if (scale == NoiseScale::LinearPower) return n_hat;
  return std::pow(10.0, n_hat / 10.0);
}

// ---------------------------------------------------------------------------

CheckpointMeta meta_for(const ModelConfig& model, NoiseScale scale, const GraphTopology& g) {
  return CheckpointMeta{model, scale, g.k_nearest, g.num_subcarriers, g.num_symbols};
}

std::string payload_bytes(const ModelParams& p) {
  std::ostringstream os(std::ios::binary);
  for (const auto& t : tensors(p))
    for (Eigen::Index r = 0; r < t.value->rows(); ++r)
      for (Eigen::Index c = 0; c < t.value->cols(); ++c)
        io::write_f32(os, static_cast<float>((*t.value)(r, c)));
  return std::move(os).str();
}

std::string checkpoint_id(const ModelParams& p) { return io::hex64(io::fnv1a64(payload_bytes(p))); }

ModelParams round_to_payload(const ModelParams& p) {
  ModelParams out = p;
  for (auto& t : tensors(out))
    *t.value = t.value->cast<float>().cast<double>();
  return out;
}

std::filesystem::path payload_path_for(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  return p.replace_extension(".bin");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest_path) {
  const auto payload_path = payload_path_for(manifest_path);
  if (payload_path == manifest_path)
    throw ConfigError("checkpoint manifest must not use the .bin extension");
  const std::string payload = payload_bytes(ckpt.params);

  nlohmann::json tensors_json = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& t : tensors(ckpt.params)) {
    tensors_json.push_back({{"name", t.name},
                            {"shape", {t.value->rows(), t.value->cols()}},
                            {"offset", offset}});
    offset += static_cast<std::size_t>(t.value->size()) * sizeof(float);
  }
  const auto& m = ckpt.meta;
  nlohmann::json j = {
      {"format", "gnce-checkpoint"},
      {"version", kCheckpointVersion},
      {"dtype", "float32"},
      {"byte_order", "little"},
      {"layout", "row-major"},
      {"model",
       {{"hidden", m.model.hidden},
        {"weight_tying", to_string(m.model.tying)},
        {"aggregation", to_string(m.model.aggregation)}}},
      {"noise_label_scale", to_string(m.noise_scale)},
      {"graph",
       {{"k_nearest", m.k_nearest},
        {"num_subcarriers", m.num_subcarriers},
        {"num_symbols", m.num_symbols}}},
      {"payload", payload_path.filename().string()},
      {"payload_bytes", payload.size()},
      {"tensors", tensors_json},
  };
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
  io::write_text_file(payload_path, payload);
  io::write_text_file(manifest_path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest_path) {
  const std::string where = manifest_path.string();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": malformed checkpoint manifest: " + e.what());
  }
  Checkpoint ckpt;
  std::string payload_name;
  std::size_t payload_size = 0;
  try {
    if (j.at("format").get<std::string>() != "gnce-checkpoint")
      throw DataError(where + ": not a checkpoint manifest");
    if (j.at("version").get<std::uint32_t>() != kCheckpointVersion)
      throw DataError(where + ": unsupported checkpoint version " + j.at("version").dump());
    if (j.at("dtype") != "float32" || j.at("byte_order") != "little" || j.at("layout") != "row-major")
      throw DataError(where + ": unsupported payload encoding");
    const auto& jm = j.at("model");
    ckpt.meta.model.hidden = jm.at("hidden").get<std::uint32_t>();
    ckpt.meta.model.tying = parse_weight_tying(jm.at("weight_tying").get<std::string>());
    ckpt.meta.model.aggregation = parse_aggregation(jm.at("aggregation").get<std::string>());
    ckpt.meta.noise_scale = parse_noise_scale(j.at("noise_label_scale").get<std::string>());
    const auto& jg = j.at("graph");
    ckpt.meta.k_nearest = jg.at("k_nearest").get<std::uint32_t>();
    ckpt.meta.num_subcarriers = jg.at("num_subcarriers").get<std::uint32_t>();
    ckpt.meta.num_symbols = jg.at("num_symbols").get<std::uint32_t>();
    payload_name = j.at("payload").get<std::string>();
    payload_size = j.at("payload_bytes").get<std::size_t>();

    ckpt.params = shaped(ckpt.meta.model);
    const auto expected = tensors(ckpt.params);
    const auto& jt = j.at("tensors");
    if (jt.size() != expected.size())
      throw DataError(where + ": expected " + std::to_string(expected.size()) + " tensors, found " +
                      std::to_string(jt.size()));
    std::size_t offset = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& e = expected[i];
      const auto shape = jt[i].at("shape").get<std::vector<Eigen::Index>>();
      if (jt[i].at("name").get<std::string>() != e.name || shape.size() != 2 ||
          shape[0] != e.value->rows() || shape[1] != e.value->cols() ||
          jt[i].at("offset").get<std::size_t>() != offset)
        throw DataError(where + ": tensor " + std::to_string(i) + " does not match " +
                        std::string(e.name) + " [" + std::to_string(e.value->rows()) + "x" +
                        std::to_string(e.value->cols()) + "]");
      offset += static_cast<std::size_t>(e.value->size()) * sizeof(float);
    }
    if (offset != payload_size)
      throw DataError(where + ": payload_bytes " + std::to_string(payload_size) +
                      " does not match tensor sizes (" + std::to_string(offset) + ")");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": invalid checkpoint manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(where + ": " + e.what());
  }

  const auto payload_path = manifest_path.parent_path() / payload_name;
  std::ifstream is(payload_path, std::ios::binary);
  if (!is) throw DataError(payload_path.string() + ": cannot open checkpoint payload");
  is.seekg(0, std::ios::end);
  const auto actual = static_cast<std::size_t>(is.tellg());
  if (actual != payload_size)
    throw DataError(payload_path.string() + ": payload is " + std::to_string(actual) +
                    " bytes, manifest says " + std::to_string(payload_size));
  is.seekg(0);
  for (auto& t : tensors(ckpt.params))
    for (Eigen::Index r = 0; r < t.value->rows(); ++r)
      for (Eigen::Index c = 0; c < t.value->cols(); ++c)
        (*t.value)(r, c) = io::read_f32(is, payload_path.string());
  return ckpt;
}

void require_compatible(const CheckpointMeta& meta, const GraphTopology& g) {
  if (meta.k_nearest != g.k_nearest || meta.num_subcarriers != g.num_subcarriers ||
      meta.num_symbols != g.num_symbols)
    throw DataError("checkpoint was trained for a " + std::to_string(meta.num_subcarriers) + "x" +
                    std::to_string(meta.num_symbols) + " grid with k=" +
                    std::to_string(meta.k_nearest) + ", graph is " +
                    std::to_string(g.num_subcarriers) + "x" + std::to_string(g.num_symbols) +
                    " with k=" + std::to_string(g.k_nearest));
}

// ---------------------------------------------------------------------------

NodeMatrix features_from_grid(const ResourceGrid& grid, const GraphTopology& g) {
  if (grid.num_subcarriers() != g.num_subcarriers || grid.num_symbols() != g.num_symbols)
    throw ConfigError("grid shape does not match the graph");
  NodeMatrix f(static_cast<Eigen::Index>(g.num_nodes()), 2);
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) {
    const cdouble v = grid.at(g.node_to_grid[i]);
    f(i, 0) = v.real();
    f(i, 1) = v.imag();
  }
  return f;
}

GraphNetEstimator::GraphNetEstimator(Checkpoint ckpt, const GraphTopology& g,
                                     bool use_noise_estimate)
    : ckpt_(std::move(ckpt)), graph_(&g), use_noise_(use_noise_estimate) {
  require_compatible(ckpt_.meta, g);
}

std::pair<NodeMatrix, double> GraphNetEstimator::run(const NodeMatrix& features) const {
  ModelOutput out = predict(ckpt_.params, features, *graph_);
  return {std::move(out.h_hat), noise_to_linear(out.n_hat, ckpt_.meta.noise_scale)};
}

FullEstimate GraphNetEstimator::estimate(const Observation& obs) const {
  auto [h, sigma2] = run(features_from_grid(obs.ls_interpolated, *graph_));
  FullEstimate est{ResourceGrid(graph_->num_subcarriers, graph_->num_symbols), std::nullopt};
  for (std::uint32_t i = 0; i < graph_->num_nodes(); ++i)
    est.h_est.at(graph_->node_to_grid[i]) = {h(i, 0), h(i, 1)};
  // A linear-scale head can go negative; the equalizer needs a power.
  if (use_noise_) est.sigma2_est = std::max(sigma2, 0.0);
  return est;
}

}  // namespace gnce
