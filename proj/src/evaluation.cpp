// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/evaluation.hpp"

#include <algorithm>
#include <ostream>

#include "draftsel/error.hpp"
#include "draftsel/report.hpp"

namespace draftsel {

double drafter_gamma(const DrafterSpec& drafter, const ConditionalModel* target,
                     std::span<const Token> prefix, std::size_t depth, Mechanism mechanism,
                     std::size_t branch) {
  if (!drafter.distribution_based()) return drafter.process().at(depth);
  if (target == nullptr) {
    throw Error("mechanism-unsupported", "distribution drafters need a target model");
  }
  return mechanism == Mechanism::chain ? chain_gamma(*target, drafter, prefix, depth)
                                       : tree_gamma(*target, drafter, prefix, depth, branch);
}

std::vector<FeedbackRecord> evaluate_all(std::span<const DrafterSpec> pool,
                                         const ConditionalModel* target,
                                         std::span<const Token> appended_tokens,
                                         std::span<const Token> prefix, Mechanism mechanism,
                                         std::size_t branch, std::size_t first_t,
                                         std::size_t chunk_id) {
  std::vector<FeedbackRecord> records;
  records.reserve(appended_tokens.size());
  std::vector<Token> context(prefix.begin(), prefix.end());
  for (std::size_t j = 0; j < appended_tokens.size(); ++j) {
    FeedbackRecord rec;
    rec.t = first_t + j;
    rec.chunk_id = chunk_id;
    rec.depth = j + 1;
    rec.is_chunk_end = j + 1 == appended_tokens.size();
    rec.gammas.reserve(pool.size());
    for (const auto& drafter : pool) {
      rec.gammas.push_back(drafter_gamma(drafter, target, context, rec.depth, mechanism, branch));
    }
    records.push_back(std::move(rec));
    context.push_back(appended_tokens[j]);
  }
  return records;
}

double accept_length_estimate(std::span<const double> gammas, std::size_t k) {
  if (gammas.size() != k) throw Error("window-incomplete", "need exactly K gammas");
  double estimate = 0.0;
  double survive = 1.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double g = i < k ? gammas[i] : 0.0;
    if (!(g >= 0.0 && g <= 1.0)) throw Error("invalid-gamma", "gamma outside [0,1]");
    estimate += static_cast<double>(i + 1) * (1.0 - g) * survive;
    survive *= g;
  }
  return estimate;
}

double length_loss(std::span<const double> window, std::size_t k) {
  if (window.size() < k) throw Error("window-incomplete", "length loss needs K observed gammas");
  const double est = accept_length_estimate(window.first(k), k);
  return std::clamp(1.0 - est / static_cast<double>(k + 1), 0.0, 1.0);
}

double prob_loss(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("invalid-gamma", "gamma outside [0,1]");
  return 1.0 - gamma;
}

double chunk_prob_loss(std::span<const double> gammas) {
  if (gammas.empty()) throw Error("empty-chunk", "chunk loss needs k_h >= 1");
  double acc = 0.0;
  for (double g : gammas) acc += prob_loss(g);
  return acc / static_cast<double>(gammas.size());
}

double chunk_length_loss(std::span<const double> gammas) {
  if (gammas.empty()) throw Error("empty-chunk", "chunk loss needs k_h >= 1");
  return length_loss(gammas, gammas.size());
}

std::size_t availability_time(std::size_t t, std::span<const std::size_t> chunk_end_times,
                              LossKind kind, std::size_t k) {
  if (kind == LossKind::hybrid) throw Error("invalid-kind", "resolve hybrid to prob or length first");
  const std::size_t needed = kind == LossKind::prob ? t : t + k;
  const auto it = std::lower_bound(chunk_end_times.begin(), chunk_end_times.end(), needed);
  if (it == chunk_end_times.end()) throw Error("pending", "no chunk end covers round " + std::to_string(t));
  return *it;
}

LossKind hybrid_loss_schedule(std::size_t round, std::size_t warmup_rounds) {
  return round < warmup_rounds ? LossKind::prob : LossKind::length;
}

void write_feedback_csv(std::ostream& out, std::span<const FeedbackRecord> records,
                        std::size_t n_drafters) {
  out << "t,chunk_id";
  for (std::size_t i = 0; i < n_drafters; ++i) out << ",gamma_" << i;
  out << '\n';
  for (const auto& r : records) {
    out << r.t << ',' << r.chunk_id;
    for (double g : r.gammas) out << ',' << format_number(g);
    out << '\n';
  }
}

}  // namespace draftsel
