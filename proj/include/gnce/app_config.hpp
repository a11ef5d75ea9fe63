// SPDX-License-Identifier: Apache-2.0
//
// The single JSON configuration shared by every CLI subcommand.
//
// Every key has a default; a config file may set any subset. Unknown keys are
// rejected. Overrides use dotted paths ("train.lambda_no=0") or a bare leaf
// name when it is unique across the schema ("lambda_no=0"); the value is
// parsed as JSON and falls back to a plain string.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gnce/chansim.hpp"
#include "gnce/estimators.hpp"
#include "gnce/eval.hpp"
#include "gnce/gnn.hpp"
#include "gnce/grid.hpp"
#include "gnce/trainer.hpp"

namespace gnce {

struct GenerateSection {
  std::uint32_t count = 1000;
  std::uint64_t seed = 1;
  bool noiseless = false;
  std::string dataset = "dataset.bin";  // relative to the output directory
};

struct EvalSection {
  std::vector<std::string> estimators{"ls", "practical", "graphnet", "oracle"};
  std::vector<std::string> datasets;
  std::string checkpoint;
  bool group_by_snr = true;
};

struct AppConfig {
  GridConfig grid;
  std::uint64_t pilot_seed = 7;
  unsigned threads = 0;
  ParamRanges channel;
  GenerateSection generate;
  std::uint32_t k_nearest = 3;
  PracticalOptions practical;
  /// train.checkpoint and train.report are relative to the output directory.
  TrainConfig train;
  EvalSection eval;
  BlerConfig bler;
};

/// Defaults, serialized; doubles as the schema for unknown-key checks.
nlohmann::json default_config_json();

nlohmann::json to_json(const AppConfig& c);
/// Strict conversion; throws ConfigError naming the offending key.
AppConfig app_config_from_json(const nlohmann::json& j);

/// Merges `overlay` into `base`; every overlay key must already exist.
void merge_strict(nlohmann::json& base, const nlohmann::json& overlay, const std::string& where = "");

/// Applies one "key=value" override to a full config document.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Defaults <- optional file <- overrides, then validated.
AppConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides);

}  // namespace gnce
