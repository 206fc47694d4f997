// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "draftsel/evaluation.hpp"
#include "draftsel/learners.hpp"
#include "draftsel/specdec.hpp"
#include "draftsel/vocab.hpp"

namespace draftsel {

enum class Game { token, chunk };
enum class DelayMode { none, qfid };
/// Hold the sampled drafter for a whole chunk, or resample it per draft depth.
enum class WithinChunk { stick, resample };

struct LearnerConfig {
  LearnerKind learner = LearnerKind::normalhedge;
  DelayMode delay_mode = DelayMode::qfid;
  LossKind loss_kind = LossKind::length;
  Game game = Game::token;
  std::size_t warmup = 0;
  std::size_t batch = 1;
  std::size_t skip = 0;
  /// Rounds of prob loss before switching to length loss (LossKind::hybrid).
  std::size_t hybrid_warmup = 6;
  OnsetAnchoring anchoring = OnsetAnchoring::realized;
  WithinChunk within_chunk = WithinChunk::stick;
  std::optional<double> eta;
  std::optional<double> exploration;

  bool operator==(const LearnerConfig&) const = default;
};

/// Everything an episode needs besides the pool itself.
struct RunConfig {
  ScenarioConfig scenario;
  LearnerConfig learner;
  Mechanism mechanism = Mechanism::chain;

  bool operator==(const RunConfig&) const = default;
};

/// The world an episode runs in. `target` is absent for pools made only of
/// acceptance processes, in which case appended tokens are placeholders.
struct EpisodeSetup {
  std::optional<ConditionalModel> target;
  std::vector<DrafterSpec> pool;
  std::vector<Token> prompt;
};

struct ChunkRecord {
  std::size_t chunk_id = 0;
  std::size_t onset = 0;   // generated tokens before this chunk
  std::size_t chosen = 0;  // drafter used at depth 1
  std::size_t accepted_count = 0;
  std::vector<Token> appended;
  std::vector<double> weights;  // play distribution the choice was drawn from
};

struct EpisodeLog {
  std::size_t n_arms = 0;
  std::size_t draft_depth = 0;
  Game game = Game::token;
  std::vector<ChunkRecord> chunks;
  std::vector<FeedbackRecord> feedback;
  std::vector<std::size_t> token_arms;  // drafter that drafted each generated token's depth

  // One entry per learner round whose loss became observable.
  std::vector<std::vector<double>> round_losses;  // f_t
  std::vector<std::size_t> round_arms;            // i_t
  std::vector<std::size_t> round_token;           // last generated token covered by the round

  std::size_t tokens_generated = 0;
  std::size_t target_calls = 0;
  std::size_t losses_applied = 0;
};

struct MetricSummary {
  double mat = 0.0;
  double avg_regret = 0.0;
  double avg_regret_normalized = 0.0;  // divided by K+1
  double final_regret = 0.0;
  std::size_t rounds = 0;
  std::vector<double> per_drafter_share;
  std::vector<double> final_weights;
};

/// Predict, draft, verify, evaluate every drafter, enqueue delayed losses,
/// update. Stops at the first chunk boundary with >= episode_tokens generated.
/// Pure in (config, setup, seed).
EpisodeLog run_episode(const RunConfig& config, const EpisodeSetup& setup, std::uint64_t seed);

/// Builds the specialist pool from `config.scenario` and runs one episode
/// seeded by `config.scenario.seed`.
EpisodeLog run_episode(const RunConfig& config);

/// Specialist-pool world with a one-token prompt from the prompt domain.
EpisodeSetup make_specialist_setup(const ScenarioConfig& scenario);

/// Prefix regret: sum f_t[i_t] - min_i sum f_t[i], best arm re-chosen per prefix.
std::vector<double> cumulative_regret(const EpisodeLog& log);

/// Tokens generated per target call (bonus token included).
double mat(const EpisodeLog& log);

MetricSummary summarize(const EpisodeLog& log);

/// CSV: chunk_id,onset,chosen,accepted,mat_so_far,regret_so_far,w_0..w_{N-1}.
void write_episode_csv(std::ostream& out, const EpisodeLog& log);

// ---------------------------------------------------------------------------
// Studies

struct CensoringConfig {
  std::vector<double> drafter1 = {1.0, 0.0};
  std::vector<double> drafter2 = {0.6, 0.6, 0.9};
  std::size_t draft_depth = 8;
  std::size_t episode_tokens = 3000;
  std::size_t n_seeds = 20;
  std::uint64_t seed = 7;
  LearnerKind learner = LearnerKind::normalhedge;
  OnsetAnchoring anchoring = OnsetAnchoring::realized;
};

struct CensoringArm {
  double uncensored_length = 0.0;   // estimate over a full depth-K window
  double censored_length_at_2 = 0.0;  // estimate truncated at k_h = 2
};

struct CensoringReport {
  CensoringArm drafter1;
  CensoringArm drafter2;
  /// Mean over seeds of the share of chunks in the last quarter of each
  /// episode that used drafter 1 / drafter 2.
  std::vector<double> chunk_level_share;
  std::vector<double> token_level_share;
  /// Per-seed majority arm in the last quarter.
  std::vector<std::size_t> chunk_level_majority;
  std::vector<std::size_t> token_level_majority;
};

/// Chunk-level censored learner vs token-level delayed learner on two
/// acceptance-process drafters.
CensoringReport run_censoring_study(const CensoringConfig& config);

struct ScalingRow {
  std::size_t pool_size = 0;
  LearnerKind learner = LearnerKind::normalhedge;
  MetricSummary mean;  // averaged over seeds
};

/// For each N runs every learner on the first N drafters of one max(N)
/// specialist pool (drafter 0 matches the prompt), on common seeds.
std::vector<ScalingRow> run_pool_scaling_sweep(const RunConfig& base,
                                               const std::vector<std::size_t>& pool_sizes,
                                               const std::vector<LearnerKind>& learners,
                                               const std::vector<std::uint64_t>& seeds);

/// Runs `config` for each seed (parallel up to DRAFTSEL_THREADS) and
/// returns per-seed summaries in seed order.
std::vector<MetricSummary> run_seeds(const RunConfig& config, const EpisodeSetup& setup,
                                     const std::vector<std::uint64_t>& seeds);

MetricSummary mean_summary(const std::vector<MetricSummary>& runs);

}  // namespace draftsel
