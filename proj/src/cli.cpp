// SPDX-License-Identifier: Apache-2.0
#include "gnce/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gnce/app_config.hpp"
#include "gnce/binary_io.hpp"
#include "gnce/dataset.hpp"
#include "gnce/error.hpp"
#include "gnce/eval.hpp"
#include "gnce/gnn.hpp"
#include "gnce/graph.hpp"
#include "gnce/trainer.hpp"

namespace gnce {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Flags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<long long> count;
  std::vector<std::string> datasets;
  std::string checkpoint;
};

struct Context {
  AppConfig cfg;
  fs::path out;
  std::ostream& os;
  std::ostream& es;
};

void write_snapshot(const Context& ctx) {
  fs::create_directories(ctx.out);
  io::write_text_file(ctx.out / "resolved_config.json", to_json(ctx.cfg).dump(2) + "\n");
}

Dataset load_datasets(const std::vector<std::string>& paths) {
  Dataset all;
  bool first = true;
  for (const auto& p : paths) {
    Dataset ds = read_dataset(p);
    if (first) {
      all = std::move(ds);
      first = false;
    } else {
      append(all, std::move(ds));
    }
  }
  return all;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

int cmd_generate(Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.generate.count == 0) throw ConfigError("generate: --count must be at least 1");
  if (c.generate.dataset.empty()) throw ConfigError("generate: dataset file name is empty");
  write_snapshot(ctx);
  GenerationOptions opts{c.pilot_seed, c.generate.noiseless, c.threads};
  const Dataset ds = gen_dataset(c.generate.count, c.grid, c.channel, c.generate.seed, opts);
  const fs::path path = ctx.out / c.generate.dataset;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_dataset(path, ds);
  write_manifest(manifest_path_for(path), ds.meta);

  const auto& r = c.channel;
  std::string profiles;
  for (auto p : r.profiles) profiles += (profiles.empty() ? "" : ",") + std::string(to_string(p));
  ctx.os << "generated " << ds.size() << " samples -> " << path.string() << "\n"
         << "grid " << ds.num_subcarriers << "x" << ds.num_symbols << ", profiles " << profiles
         << ", delay spread " << fmt(r.delay_spread_min_s * 1e9) << ".."
         << fmt(r.delay_spread_max_s * 1e9) << " ns, doppler " << fmt(r.doppler_min_hz) << ".."
         << fmt(r.doppler_max_hz) << " Hz, snr "
         << (c.generate.noiseless ? std::string("noiseless")
                                  : fmt(r.snr.min_db) + ".." + fmt(r.snr.max_db) + " dB")
         << "\n";
  return kExitOk;
}

int cmd_train(Context& ctx) {
  TrainConfig tc = ctx.cfg.train;
  if (tc.dataset_paths.empty())
    throw ConfigError("train: no dataset given (use --dataset or train.datasets)");
  tc.checkpoint_path = ctx.out / tc.checkpoint_path;
  if (!tc.report_path.empty()) tc.report_path = ctx.out / tc.report_path;
  tc.validate(true);
  const auto g = build_graph(ctx.cfg.grid, ctx.cfg.k_nearest);
  write_snapshot(ctx);

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochStats& s) {
    ctx.os << "epoch " << s.epoch << "/" << tc.epochs << " loss " << fmt(s.total, 8) << " ce "
           << fmt(s.ce, 8) << " noise " << fmt(s.noise, 8);
    if (s.holdout_total) ctx.os << " holdout " << fmt(*s.holdout_total, 8);
    ctx.os << " (" << fmt(s.seconds, 3) << " s)\n";
    ctx.os.flush();
  };
  const TrainReport report = train(tc, g, hooks);
  ctx.os << "checkpoint " << tc.checkpoint_path.string() << " id " << report.final_checkpoint_id
         << ", " << count_params(report.params) << " parameters, wall-clock "
         << fmt(report.wall_clock_s, 4) << " s\n";
  return kExitOk;
}

EstimatorContext estimator_context(const Context& ctx, const GraphTopology* g) {
  return {g, ctx.cfg.eval.checkpoint, ctx.cfg.practical};
}

int cmd_eval_mse(Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.eval.datasets.empty())
    throw ConfigError("eval-mse: no dataset given (use --dataset or eval.datasets)");
  if (c.eval.estimators.empty()) throw ConfigError("eval-mse: eval.estimators is empty");
  const auto g = build_graph(c.grid, c.k_nearest);
  std::vector<std::unique_ptr<Estimator>> estimators;
  for (const auto& name : c.eval.estimators) estimators.push_back(make_estimator(name, estimator_context(ctx, &g)));
  const Dataset testset = load_datasets(c.eval.datasets);
  write_snapshot(ctx);

  std::vector<double> expected;
  if (c.channel.snr.mode == SnrSpec::Mode::Grid) expected = c.channel.snr.grid_values();

  EvalReport mse_report;
  EvalReport noise_report;
  json summary = json::object();
  for (const auto& est : estimators) {
    const MseTable table = evaluate_mse(*est, testset, c.grid, c.eval.group_by_snr, c.threads, expected);
    for (const auto& w : table.warnings) ctx.es << "warning: " << est->name() << ": " << w << "\n";
    for (const auto& row : table.rows) {
      mse_report.rows.push_back({table.estimator, row.snr_db, "mse", row.mse, row.count});
      ctx.os << table.estimator << " snr " << fmt(row.snr_db) << " mse " << fmt(row.mse) << " ("
             << row.count << ")\n";
    }
    if (const auto* gn = dynamic_cast<const GraphNetEstimator*>(est.get()); gn && est->name() == "graphnet") {
      const NoiseReport nr = evaluate_noise(*gn, testset, c.threads);
      for (const auto& row : nr.rows)
        noise_report.rows.push_back({est->name(), row.snr_db, "noise_median_rel_error",
                                     row.median_rel_error, row.count});
      summary[est->name()] = {{"noise_pearson", std::isnan(nr.pearson) ? json(nullptr) : json(nr.pearson)},
                              {"samples", nr.n_hat.size()}};
      ctx.os << est->name() << " noise estimate: pearson " << fmt(nr.pearson) << "\n";
    }
  }
  emit_csv(mse_report, ctx.out / "mse.csv");
  if (!noise_report.rows.empty()) {
    emit_csv(noise_report, ctx.out / "noise.csv");
    io::write_text_file(ctx.out / "noise_summary.json", summary.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_eval_bler(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto g = build_graph(c.grid, c.k_nearest);
  std::vector<std::unique_ptr<Estimator>> owned;
  std::vector<const Estimator*> estimators;
  for (const auto& name : c.bler.estimators) {
    owned.push_back(make_estimator(name, estimator_context(ctx, &g)));
    estimators.push_back(owned.back().get());
  }
  write_snapshot(ctx);
  const BlerResult result = run_bler_detailed(c.bler, c.grid, estimators);
  emit_csv(bler_report(result), ctx.out / "bler.csv");

  json summary = json::array();
  for (const auto& curve : result.curves) {
    for (std::size_t s = 0; s < curve.snr_db.size(); ++s) {
      double ser = 0.0;
      for (const auto& b : curve.blocks[s]) ser += b.ser();
      ser /= static_cast<double>(curve.blocks[s].size());
      summary.push_back({{"estimator", curve.estimator},
                         {"snr_db", curve.snr_db[s]},
                         {"bler", curve.bler(s)},
                         {"mean_ser", ser},
                         {"blocks", curve.blocks[s].size()}});
      ctx.os << curve.estimator << " snr " << fmt(curve.snr_db[s]) << " bler " << fmt(curve.bler(s))
             << " mean_ser " << fmt(ser) << "\n";
    }
  }
  io::write_text_file(ctx.out / "bler_summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

int cmd_inspect_graph(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = build_graph(ctx.cfg.grid, ctx.cfg.k_nearest);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_snapshot(ctx);

  std::map<std::uint32_t, std::size_t> in_hist;
  std::vector<std::uint32_t> out_deg(g.num_nodes(), 0);
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) {
    in_hist[static_cast<std::uint32_t>(g.incoming(i).size())]++;
    for (const Edge& e : g.incoming(i)) out_deg[e.source]++;
  }
  std::map<std::uint32_t, std::size_t> out_hist;
  for (auto p : g.pilot_nodes) out_hist[out_deg[p]]++;

  std::string csv = "source_m,source_n,target_m,target_n,distance\n";
  for (const Edge& e : g.edges) {
    const auto s = g.node_to_grid[e.source];
    const auto t = g.node_to_grid[e.target];
    csv += std::to_string(s.m) + "," + std::to_string(s.n) + "," + std::to_string(t.m) + "," +
           std::to_string(t.n) + "," + fmt(edge_distance(g, e), 17) + "\n";
  }
  io::write_text_file(ctx.out / "edges.csv", csv);

  auto hist_json = [](const std::map<std::uint32_t, std::size_t>& h) {
    json j = json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
  };
  const json stats = {{"nodes", g.num_nodes()},
                      {"edges", g.edges.size()},
                      {"pilots", g.pilot_nodes.size()},
                      {"k_nearest", g.k_nearest},
                      {"in_degree_histogram", hist_json(in_hist)},
                      {"pilot_out_degree_histogram", hist_json(out_hist)}};
  io::write_text_file(ctx.out / "graph_stats.json", stats.dump(2) + "\n");

  ctx.os << "nodes=" << g.num_nodes() << " edges=" << g.edges.size() << "\n";
  ctx.os << "in_degree_histogram";
  for (const auto& [k, v] : in_hist) ctx.os << " " << k << ":" << v;
  ctx.os << "\npilot_out_degree_histogram";
  for (const auto& [k, v] : out_hist) ctx.os << " " << k << ":" << v;
  ctx.os << "\nbuilt in " << fmt(secs * 1e3, 4) << " ms\n";
  return kExitOk;
}

int cmd_info(Context& ctx, const std::string& checkpoint) {
  const auto& c = ctx.cfg;
  write_snapshot(ctx);
  ctx.os << "grid " << c.grid.num_subcarriers() << "x" << c.grid.num_symbols << ", "
         << c.grid.num_pilots() << " pilots, k_nearest " << c.k_nearest << "\n";
  if (!checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    ctx.os << "checkpoint " << checkpoint << "\n"
           << "model hidden=" << ck.meta.model.hidden << " tying=" << to_string(ck.meta.model.tying)
           << " aggregation=" << to_string(ck.meta.model.aggregation)
           << " noise_label_scale=" << to_string(ck.meta.noise_scale) << "\n"
           << "parameters=" << count_params(ck.params)
           << " payload_bytes=" << payload_bytes(ck.params).size()
           << " id=" << checkpoint_id(ck.params) << "\n";
  } else {
    const ModelParams p = init_params(c.train.init_seed, c.train.model);
    ctx.os << "model hidden=" << p.config.hidden << " tying=" << to_string(p.config.tying)
           << " aggregation=" << to_string(p.config.aggregation) << "\n"
           << "parameters=" << count_params(p) << " payload_bytes=" << payload_bytes(p).size() << "\n";
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file");
  sub->add_option("--override", f.overrides, "key=value override (repeatable)");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "seed for this subcommand");
  sub->add_option("--threads", f.threads, "worker threads (0 = all cores)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph neural network channel estimation toolkit", "gnce"};
  app.require_subcommand(1, 1);
  Flags f;

  auto* generate = app.add_subcommand("generate", "generate a labeled dataset");
  add_common(generate, f);
  generate->add_option("--count", f.count, "number of samples");
  generate->add_option("--dataset", f.datasets, "output dataset file name")->expected(1);

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd, f);
  train_cmd->add_option("--dataset", f.datasets, "training dataset (repeatable)");
  train_cmd->add_option("--checkpoint", f.checkpoint, "checkpoint manifest to write");

  auto* eval_mse = app.add_subcommand("eval-mse", "MSE per SNR bucket on stored test sets");
  add_common(eval_mse, f);
  eval_mse->add_option("--dataset", f.datasets, "test dataset (repeatable)");
  eval_mse->add_option("--checkpoint", f.checkpoint, "checkpoint for graphnet");

  auto* eval_bler = app.add_subcommand("eval-bler", "Monte Carlo BLER sweep");
  add_common(eval_bler, f);
  eval_bler->add_option("--checkpoint", f.checkpoint, "checkpoint for graphnet");

  auto* inspect = app.add_subcommand("inspect-graph", "dump the RE graph");
  add_common(inspect, f);

  auto* info = app.add_subcommand("info", "grid and model summary");
  add_common(info, f);
  info->add_option("--checkpoint", f.checkpoint, "checkpoint to describe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    // Flags become overrides so that the snapshot records them.
    std::vector<std::string> overrides = f.overrides;
    auto set = [&](const std::string& key, const json& v) { overrides.push_back(key + "=" + v.dump()); };
    if (f.threads) set("threads", *f.threads);
    if (f.seed) {
      if (name == "generate") set("generate.seed", *f.seed);
      else if (name == "train") set("train.seed", *f.seed);
      else if (name == "eval-bler") set("bler.seed", *f.seed);
      else throw ConfigError(name + " does not take --seed");
    }
    if (f.count) {
      if (*f.count <= 0) throw ConfigError("generate: --count must be at least 1");
      set("generate.count", *f.count);
    }
    if (!f.datasets.empty()) {
      if (name == "generate") set("generate.dataset", f.datasets.front());
      else if (name == "train") set("train.datasets", f.datasets);
      else set("eval.datasets", f.datasets);
    }
    if (!f.checkpoint.empty() && name != "info") {
      set(name == "train" ? "train.checkpoint" : "eval.checkpoint", f.checkpoint);
    }

    Context ctx{resolve_config(f.config, overrides), fs::path(f.out), out, err};
    if (name == "generate") return cmd_generate(ctx);
    if (name == "train") return cmd_train(ctx);
    if (name == "eval-mse") return cmd_eval_mse(ctx);
    if (name == "eval-bler") return cmd_eval_bler(ctx);
    if (name == "inspect-graph") return cmd_inspect_graph(ctx);
    return cmd_info(ctx, f.checkpoint);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace gnce
