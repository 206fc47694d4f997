// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "draftsel/harness.hpp"

namespace draftsel {

enum class Study { specialist, censor };

/// Everything a CLI verb reads from a config file. Keys are flat; see
/// README for the list.
struct ToolConfig {
  RunConfig run;
  Study study = Study::specialist;
  std::vector<std::uint64_t> seeds;  // empty: {scenario.seed}
  std::vector<LearnerKind> learners = {LearnerKind::normalhedge, LearnerKind::exp3, LearnerKind::ucb};
  std::vector<std::size_t> pool_sizes = {2, 4, 8, 16};
  std::vector<double> censor_drafter1 = {1.0, 0.0};
  std::vector<double> censor_drafter2 = {0.6, 0.6, 0.9};
  std::size_t censor_seeds = 20;
  std::size_t oracle_length = 2;
  bool include_target_drafter = false;

  std::vector<std::uint64_t> resolved_seeds() const;
  CensoringConfig censoring() const;

  bool operator==(const ToolConfig&) const = default;
};

/// Parses and validates. Throws Error("config-invalid", "<key>: <why>").
/// A run manifest is accepted too; its embedded config is used.
ToolConfig parse_config(const nlohmann::json& doc);
ToolConfig parse_config_text(const std::string& text);
ToolConfig load_config(const std::filesystem::path& path);

/// Every key, in a fixed order; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const ToolConfig& config);

void validate(const ToolConfig& config);

std::string to_string(Mechanism m);
std::string to_string(DelayMode m);
std::string to_string(LossKind k);
std::string to_string(Game g);
std::string to_string(OnsetAnchoring a);
std::string to_string(WithinChunk w);

}  // namespace draftsel
