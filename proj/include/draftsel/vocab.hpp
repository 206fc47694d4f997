// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "draftsel/random.hpp"

namespace draftsel {

using Token = std::int32_t;

/// Normalization tolerance for every probability vector in the library.
inline constexpr double kNormTolerance = 1e-9;

/// A normalized probability vector over a finite vocabulary.
class Distribution {
 public:
  Distribution() = default;

  /// Validates non-negativity and normalization (throws "invalid-distribution").
  explicit Distribution(std::vector<double> probs);

  static Distribution uniform(std::size_t vocab_size);
  static Distribution one_hot(std::size_t vocab_size, Token token);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<double> probs_;
};

/// 1/2 * sum |p - q|. Throws "size-mismatch" on differing vocabularies.
double tv_distance(const Distribution& p, const Distribution& q);

/// Inverse-CDF draw; consumes exactly one uniform from `rng`.
Token sample_token(const Distribution& dist, Rng& rng);

using ContextTable = std::vector<Distribution>;

/// Order-0 or order-1 next-token model, optionally time-inhomogeneous
/// (one table per within-chunk depth).
class ConditionalModel {
 public:
  ConditionalModel() = default;

  /// Context-free model: one row used for every prefix.
  static ConditionalModel context_free(Distribution row);
  /// Bigram model: row c is the next-token law after token c.
  static ConditionalModel bigram(ContextTable rows);

  /// Returns a copy that uses `variants[k-1]` at depth k. Every variant must
  /// have the same shape as the base table.
  ConditionalModel with_depth_variants(std::vector<ContextTable> variants) const;

  int order() const { return order_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const ContextTable& table() const { return table_; }
  const std::vector<ContextTable>& depth_variants() const { return depth_variants_; }
  bool time_inhomogeneous() const { return !depth_variants_.empty(); }

  /// Next-token distribution after `prefix` at within-chunk `depth` (>= 1).
  /// Depths past the last variant reuse the last one.
  const Distribution& next(std::span<const Token> prefix, std::size_t depth = 1) const;

 private:
  int order_ = 0;
  std::size_t vocab_size_ = 0;
  ContextTable table_;
  std::vector<ContextTable> depth_variants_;
};

/// Free-function form of ConditionalModel::next.
const Distribution& conditional_dist(const ConditionalModel& model,
                                     std::span<const Token> prefix,
                                     std::size_t depth);

/// Explicit per-depth acceptance probabilities; the last entry repeats.
class AcceptanceProcess {
 public:
  explicit AcceptanceProcess(std::vector<double> per_depth_gamma);

  double at(std::size_t depth) const;
  const std::vector<double>& per_depth() const { return per_depth_; }

 private:
  std::vector<double> per_depth_;
};

struct DrafterSpec {
  std::size_t id = 0;
  std::variant<ConditionalModel, AcceptanceProcess> kind;
  std::string label;

  bool distribution_based() const {
    return std::holds_alternative<ConditionalModel>(kind);
  }
  /// Throws "mechanism-unsupported" for acceptance-process drafters.
  const ConditionalModel& model() const;
  const AcceptanceProcess& process() const;
};

struct ScenarioConfig {
  std::size_t vocab_size = 56;
  std::size_t n_drafters = 7;
  std::size_t draft_depth = 8;
  std::size_t branch_factor = 1;
  double in_domain_tv = 0.1;
  double off_domain_tv = 0.6;
  std::size_t episode_tokens = 5000;
  /// Domain of the prompt; nullopt means "mixed".
  std::optional<std::size_t> prompt_domain = 0;
  std::uint64_t seed = 1;

  /// Throws Error("config-invalid") naming the offending key.
  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Target plus drafter pool with contiguous per-domain context blocks.
struct SpecialistPool {
  ConditionalModel target;
  std::vector<DrafterSpec> drafters;
  std::size_t n_blocks = 0;

  /// Domain block of a context token.
  std::size_t block_of(Token context) const;
  /// First token of each block; prompts start here.
  Token block_start(std::size_t block) const;
};

/// Builds the target and N specialists. Drafter i sits at TV `in_domain_tv`
/// from the target on contexts of block i and `off_domain_tv` elsewhere.
/// Deterministic in `config.seed`. Throws "tv-unreachable".
SpecialistPool make_specialist_pool(const ScenarioConfig& config);

/// Row at TV distance `tv` from `p`: (1-l) p + l * delta_j with l found by
/// bisection. `away` picks j among feasible tokens. Throws "tv-unreachable".
Distribution tv_shifted_row(const Distribution& p, double tv, Rng& away);

}  // namespace draftsel
