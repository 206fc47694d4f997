// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "draftsel/specdec.hpp"
#include "draftsel/vocab.hpp"

namespace draftsel {

/// Which within-chunk depth an off-policy drafter is evaluated at.
///  realized: offset of the token from the onset of the chunk it was verified in.
///  sliding:  depth k for the k-th token of every length-loss window.
enum class OnsetAnchoring { realized, sliding };

/// Loss kind of a single round. `hybrid` switches prob -> length after a warmup.
enum class LossKind { prob, length, hybrid };

/// Full-information acceptance feedback for one verified token.
struct FeedbackRecord {
  std::size_t t = 0;  // 1-based index among generated tokens
  std::vector<double> gammas;
  std::size_t chunk_id = 0;
  std::size_t depth = 0;  // offset from the chunk onset, 1-based
  bool is_chunk_end = false;
};

/// A loss vector for round t that becomes observable at round `available_at`.
struct TimedLoss {
  std::size_t t = 0;
  std::vector<double> loss;
  std::size_t available_at = 0;
};

/// Acceptance probability of one drafter for the token following `prefix` at
/// within-chunk `depth`. Acceptance-process drafters ignore the target.
double drafter_gamma(const DrafterSpec& drafter, const ConditionalModel* target,
                     std::span<const Token> prefix, std::size_t depth, Mechanism mechanism,
                     std::size_t branch);

/// Gamma of every drafter for each token of a verified chunk, replaying the
/// single verified trajectory; never samples from the target. `prefix` is
/// everything before the chunk, `first_t` the index of its first token.
/// `target` may be null only for pools made entirely of acceptance processes.
std::vector<FeedbackRecord> evaluate_all(std::span<const DrafterSpec> pool,
                                         const ConditionalModel* target,
                                         std::span<const Token> appended_tokens,
                                         std::span<const Token> prefix, Mechanism mechanism,
                                         std::size_t branch, std::size_t first_t = 1,
                                         std::size_t chunk_id = 0);

/// One-step counterfactual estimate sum_{k=1}^{K+1} k (1-g_k) prod_{j<k} g_j
/// with g_{K+1} = 0 appended internally. `gammas.size()` must equal `k`.
double accept_length_estimate(std::span<const double> gammas, std::size_t k);

/// 1 - estimate/(K+1) over a fully observed window. Throws "window-incomplete".
double length_loss(std::span<const double> window, std::size_t k);

/// 1 - gamma.
double prob_loss(double gamma);

/// Mean rejection probability over a realized chunk of length k_h.
double chunk_prob_loss(std::span<const double> gammas);

/// Censored length loss: estimate with K := k_h, normalized by k_h + 1.
double chunk_length_loss(std::span<const double> gammas);

/// Round at which the loss for token t becomes observable: the first chunk
/// end >= t (prob) or >= t + K (length). Throws "pending" past the last end.
std::size_t availability_time(std::size_t t, std::span<const std::size_t> chunk_end_times,
                              LossKind kind, std::size_t k);

inline constexpr std::size_t kForever = std::numeric_limits<std::size_t>::max();

/// prob while round < warmup_rounds, length afterwards.
LossKind hybrid_loss_schedule(std::size_t round, std::size_t warmup_rounds);

/// CSV with columns t, chunk_id, gamma_0..gamma_{N-1}.
void write_feedback_csv(std::ostream& out, std::span<const FeedbackRecord> records,
                        std::size_t n_drafters);

}  // namespace draftsel
