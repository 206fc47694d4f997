// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "draftsel/config.hpp"

namespace draftsel {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;

/// Command-line overrides applied on top of the loaded config.
struct Overrides {
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::vector<LearnerKind>> learners;
};

struct CommandContext {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = ".";
  Overrides overrides;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

/// Each verb returns an exit code; errors are reported on `err`.
int cmd_run(const CommandContext& ctx);
int cmd_compare(const CommandContext& ctx);
int cmd_scale(const CommandContext& ctx);
int cmd_censor(const CommandContext& ctx);
int cmd_oracle(const CommandContext& ctx);

/// Full CLI: `draftsel <verb> --config PATH [--out DIR] [--seeds LIST] [--learners LIST]`.
int run_cli(int argc, char** argv);

/// Exit code for an Error code.
int exit_code_for(const std::string& error_code);

}  // namespace draftsel
