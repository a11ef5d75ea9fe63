// SPDX-License-Identifier: Apache-2.0
#include "gnce/app_config.hpp"

#include <cmath>
#include <functional>
#include <type_traits>

#include "gnce/binary_io.hpp"
#include "gnce/error.hpp"

namespace gnce {

namespace {

using json = nlohmann::json;

json grid_json(const GridConfig& g) {
  // Derived fields are left out so that overriding num_prb stays consistent.
  return {{"num_prb", g.num_prb},
          {"num_symbols", g.num_symbols},
          {"dmrs_symbol_indices", g.dmrs_symbol_indices},
          {"dmrs_subcarrier_offsets", g.dmrs_subcarrier_offsets},
          {"scs_hz", g.scs_hz}};
}

std::vector<std::string> profile_names(const std::vector<TdlName>& v) {
  std::vector<std::string> out;
  for (auto p : v) out.emplace_back(to_string(p));
  return out;
}

std::vector<std::string> path_strings(const std::vector<std::filesystem::path>& v) {
  std::vector<std::string> out;
  for (const auto& p : v) out.push_back(p.string());
  return out;
}

/// Reads j[key] as T, naming the dotted key on a type mismatch.
template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!j.at(key).is_number_unsigned()) throw ConfigError("");
    }
    return j.at(key).get<T>();
  } catch (const ConfigError&) {
    throw ConfigError("config key '" + where + key + "' must be a non-negative integer: " + j.at(key).dump());
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type: " + j.at(key).dump());
  }
}

/// Seconds to nanoseconds, rounded to 1e-6 ns so values written back match what was read.
double to_ns(double s) { return std::round(s * 1e9 * 1e6) / 1e6; }

void collect_leaves(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_leaves(value, path, out);
    } else {
      out.push_back(path);
    }
  }
}

json::json_pointer pointer_for(const std::string& dotted) {
  std::string p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const auto dot = dotted.find('.', start);
    const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + dotted + "' has an empty component");
    p += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(p);
}

}  // namespace

json to_json(const AppConfig& c) {
  const auto& r = c.channel;
  const auto& t = c.train;
  const auto& b = c.bler;
  return {
      {"grid", grid_json(c.grid)},
      {"pilot_seed", c.pilot_seed},
      {"threads", c.threads},
      {"channel",
       {{"profiles", profile_names(r.profiles)},
        {"delay_spread_ns", {{"min", to_ns(r.delay_spread_min_s)}, {"max", to_ns(r.delay_spread_max_s)}}},
        {"doppler_hz", {{"min", r.doppler_min_hz}, {"max", r.doppler_max_hz}}},
        {"snr_db",
         {{"mode", r.snr.mode == SnrSpec::Mode::Grid ? "grid" : "uniform"},
          {"min", r.snr.min_db},
          {"max", r.snr.max_db},
          {"step", r.snr.step_db}}}}},
      {"generate",
       {{"count", c.generate.count},
        {"seed", c.generate.seed},
        {"noiseless", c.generate.noiseless},
        {"dataset", c.generate.dataset}}},
      {"graph", {{"k_nearest", c.k_nearest}}},
      {"model",
       {{"hidden", t.model.hidden},
        {"weight_tying", to_string(t.model.tying)},
        {"aggregation", to_string(t.model.aggregation)}}},
      {"practical",
       {{"kappa", c.practical.kappa},
        {"window_fraction", c.practical.window_fraction},
        {"noise_fraction", c.practical.noise_fraction}}},
      {"train",
       {{"epochs", t.epochs},
        {"lr", t.lr},
        {"lambda_ce", t.weights.ce},
        {"lambda_no", t.weights.noise},
        {"seed", t.seed},
        {"init_seed", t.init_seed},
        {"datasets", path_strings(t.dataset_paths)},
        {"checkpoint", t.checkpoint_path.string()},
        {"report", t.report_path.string()},
        {"eval_every", t.eval_every},
        {"noise_label_scale", to_string(t.noise_label_scale)},
        {"train_fraction", t.train_fraction}}},
      {"eval",
       {{"estimators", c.eval.estimators},
        {"datasets", c.eval.datasets},
        {"checkpoint", c.eval.checkpoint},
        {"group_by_snr", c.eval.group_by_snr}}},
      {"bler",
       {{"snr_points", b.snr_points},
        {"blocks_per_snr", b.blocks_per_snr},
        {"scenario",
         {{"profile", to_string(b.scenario.profile)},
          {"delay_spread_ns", to_ns(b.scenario.delay_spread_s)},
          {"doppler_hz", b.scenario.doppler_hz}}},
        {"ser_threshold", b.ser_threshold},
        {"estimators", b.estimators},
        {"seed", b.seed}}},
  };
}

json default_config_json() {
  AppConfig c;
  c.train.checkpoint_path = "checkpoint.json";
  c.train.report_path = "train_report.jsonl";
  c.bler.snr_points = {0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30};
  return to_json(c);
}

AppConfig app_config_from_json(const json& doc) {
  // Shape check against the schema first, so type errors below can assume
  // every key exists.
  json j = default_config_json();
  merge_strict(j, doc);

  AppConfig c;
  try {
    from_json(j.at("grid"), c.grid);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  c.pilot_seed = get<std::uint64_t>(j, "pilot_seed", "");
  c.threads = get<unsigned>(j, "threads", "");

  const auto& ch = j.at("channel");
  c.channel.profiles.clear();
  for (const auto& name : get<std::vector<std::string>>(ch, "profiles", "channel."))
    c.channel.profiles.push_back(parse_tdl_name(name));
  c.channel.delay_spread_min_s = get<double>(ch.at("delay_spread_ns"), "min", "channel.delay_spread_ns.") * 1e-9;
  c.channel.delay_spread_max_s = get<double>(ch.at("delay_spread_ns"), "max", "channel.delay_spread_ns.") * 1e-9;
  c.channel.doppler_min_hz = get<double>(ch.at("doppler_hz"), "min", "channel.doppler_hz.");
  c.channel.doppler_max_hz = get<double>(ch.at("doppler_hz"), "max", "channel.doppler_hz.");
  const auto& snr = ch.at("snr_db");
  const auto mode = get<std::string>(snr, "mode", "channel.snr_db.");
  if (mode != "grid" && mode != "uniform")
    throw ConfigError("channel.snr_db.mode must be 'grid' or 'uniform', got '" + mode + "'");
  c.channel.snr.mode = mode == "grid" ? SnrSpec::Mode::Grid : SnrSpec::Mode::Uniform;
  c.channel.snr.min_db = get<double>(snr, "min", "channel.snr_db.");
  c.channel.snr.max_db = get<double>(snr, "max", "channel.snr_db.");
  c.channel.snr.step_db = get<double>(snr, "step", "channel.snr_db.");
  c.channel.validate();

  const auto& gen = j.at("generate");
  c.generate.count = get<std::uint32_t>(gen, "count", "generate.");
  c.generate.seed = get<std::uint64_t>(gen, "seed", "generate.");
  c.generate.noiseless = get<bool>(gen, "noiseless", "generate.");
  c.generate.dataset = get<std::string>(gen, "dataset", "generate.");

  c.k_nearest = get<std::uint32_t>(j.at("graph"), "k_nearest", "graph.");
  if (c.k_nearest == 0) throw ConfigError("graph.k_nearest must be at least 1");

  const auto& m = j.at("model");
  c.train.model.hidden = get<std::uint32_t>(m, "hidden", "model.");
  c.train.model.tying = parse_weight_tying(get<std::string>(m, "weight_tying", "model."));
  c.train.model.aggregation = parse_aggregation(get<std::string>(m, "aggregation", "model."));

  const auto& pr = j.at("practical");
  c.practical.kappa = get<double>(pr, "kappa", "practical.");
  c.practical.window_fraction = get<double>(pr, "window_fraction", "practical.");
  c.practical.noise_fraction = get<double>(pr, "noise_fraction", "practical.");
  if (!(c.practical.kappa >= 0.0) || !(c.practical.window_fraction > 0.0 && c.practical.window_fraction <= 1.0) ||
      !(c.practical.noise_fraction > 0.0 && c.practical.noise_fraction < 1.0))
    throw ConfigError("practical: kappa >= 0, window_fraction in (0, 1], noise_fraction in (0, 1)");

  const auto& t = j.at("train");
  c.train.epochs = get<std::uint32_t>(t, "epochs", "train.");
  c.train.lr = get<double>(t, "lr", "train.");
  c.train.weights.ce = get<double>(t, "lambda_ce", "train.");
  c.train.weights.noise = get<double>(t, "lambda_no", "train.");
  c.train.seed = get<std::uint64_t>(t, "seed", "train.");
  c.train.init_seed = get<std::uint64_t>(t, "init_seed", "train.");
  c.train.dataset_paths.clear();
  for (const auto& p : get<std::vector<std::string>>(t, "datasets", "train."))
    c.train.dataset_paths.emplace_back(p);
  c.train.checkpoint_path = get<std::string>(t, "checkpoint", "train.");
  c.train.report_path = get<std::string>(t, "report", "train.");
  c.train.eval_every = get<std::uint32_t>(t, "eval_every", "train.");
  c.train.noise_label_scale = parse_noise_scale(get<std::string>(t, "noise_label_scale", "train."));
  c.train.train_fraction = get<double>(t, "train_fraction", "train.");
  c.train.validate(false);

  const auto& e = j.at("eval");
  c.eval.estimators = get<std::vector<std::string>>(e, "estimators", "eval.");
  c.eval.datasets = get<std::vector<std::string>>(e, "datasets", "eval.");
  c.eval.checkpoint = get<std::string>(e, "checkpoint", "eval.");
  c.eval.group_by_snr = get<bool>(e, "group_by_snr", "eval.");

  const auto& b = j.at("bler");
  c.bler.snr_points = get<std::vector<double>>(b, "snr_points", "bler.");
  c.bler.blocks_per_snr = get<std::uint32_t>(b, "blocks_per_snr", "bler.");
  const auto& sc = b.at("scenario");
  c.bler.scenario.profile = parse_tdl_name(get<std::string>(sc, "profile", "bler.scenario."));
  c.bler.scenario.delay_spread_s = get<double>(sc, "delay_spread_ns", "bler.scenario.") * 1e-9;
  c.bler.scenario.doppler_hz = get<double>(sc, "doppler_hz", "bler.scenario.");
  c.bler.ser_threshold = get<double>(b, "ser_threshold", "bler.");
  c.bler.estimators = get<std::vector<std::string>>(b, "estimators", "bler.");
  c.bler.seed = get<std::uint64_t>(b, "seed", "bler.");
  c.bler.pilot_seed = c.pilot_seed;
  c.bler.threads = c.threads;
  c.bler.validate();
  return c;
}

void merge_strict(json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object())
    throw ConfigError("config" + (where.empty() ? std::string() : " section '" + where + "'") +
                      " must be a JSON object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    auto& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else {
      slot = value;
    }
  }
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  std::vector<std::string> leaves;
  collect_leaves(doc, "", leaves);
  if (key.find('.') == std::string::npos) {
    std::vector<std::string> hits;
    for (const auto& leaf : leaves) {
      const auto dot = leaf.rfind('.');
      if ((dot == std::string::npos ? leaf : leaf.substr(dot + 1)) == key) hits.push_back(leaf);
    }
    if (hits.empty()) throw ConfigError("unknown config key '" + key + "'");
    if (hits.size() > 1) {
      std::string list;
      for (const auto& h : hits) list += (list.empty() ? "" : ", ") + h;
      throw ConfigError("config key '" + key + "' is ambiguous (" + list + "); use the dotted form");
    }
    key = hits.front();
  } else if (std::find(leaves.begin(), leaves.end(), key) == leaves.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }

  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  doc[pointer_for(key)] = std::move(value);
}

AppConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  json doc = default_config_json();
  if (!config_path.empty()) {
    json file;
    try {
      file = json::parse(io::read_text_file(config_path));
    } catch (const json::exception& e) {
      throw ConfigError(config_path + ": invalid JSON: " + e.what());
    }
    merge_strict(doc, file);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return app_config_from_json(doc);
}

}  // namespace gnce
