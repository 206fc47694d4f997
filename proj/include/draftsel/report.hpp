// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "draftsel/harness.hpp"

namespace draftsel {

inline constexpr std::string_view kToolVersion = "draftsel 0.3.0";

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

/// Keys in fixed order: mat, avg_regret, avg_regret_normalized, final_regret,
/// rounds, per_drafter_share, final_weights, config.
nlohmann::ordered_json summary_json(const MetricSummary& summary, const nlohmann::ordered_json& config);

/// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Standalone SVG line chart.
std::string render_svg(const PlotSpec& plot);

}  // namespace draftsel
