// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

// Exhaustive ground truth on small instances. Nothing here calls the
// drafting, verification or evaluation code it is used to check.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "draftsel/specdec.hpp"
#include "draftsel/vocab.hpp"

namespace draftsel {

struct EnumerationBudget {
  std::size_t max_states = 1'000'000;
};

using SequenceDistribution = std::map<std::vector<Token>, double>;

/// Exact expected tokens appended by one speculative chunk from `prefix`
/// (accepted drafts plus the bonus or correction token). `target` may be
/// null for acceptance-process drafters. Throws "budget-exceeded".
double brute_expected_accept_length(const ConditionalModel* target, const DrafterSpec& drafter,
                                    std::span<const Token> prefix, std::size_t k,
                                    Mechanism mechanism, std::size_t branch,
                                    EnumerationBudget budget = {});

/// Exact expectation of the length estimator when the window's gammas are
/// evaluated along target-sampled continuations of `prefix` (gamma at
/// window position k uses drafter depth k).
double exact_estimator_expectation(const ConditionalModel* target, const DrafterSpec& drafter,
                                   std::span<const Token> prefix, std::size_t k,
                                   Mechanism mechanism, std::size_t branch,
                                   EnumerationBudget budget = {});

/// Law of the next `length` target tokens after `prefix`.
SequenceDistribution target_sequence_distribution(const ConditionalModel& target,
                                                  std::span<const Token> prefix,
                                                  std::size_t length, EnumerationBudget budget = {});

/// Arm weights for the next chunk given the tokens generated so far and the
/// chunk index.
using SelectionPolicy =
    std::function<std::vector<double>(std::span<const Token> generated, std::size_t chunk_index)>;

SelectionPolicy fixed_policy(std::size_t arm, std::size_t n_arms);
SelectionPolicy round_robin_policy(std::size_t n_arms);
/// Hedge on per-token rejection probabilities of every drafter, updated with
/// all tokens generated so far.
SelectionPolicy hedge_policy(const ConditionalModel& target, std::span<const DrafterSpec> pool,
                             std::span<const Token> prompt, double eta);

/// Exact law of the first `length` generated tokens when each chunk's
/// drafter is drawn from `policy`. Distribution drafters only.
SequenceDistribution brute_output_distribution(const ConditionalModel& target,
                                               std::span<const DrafterSpec> pool,
                                               const SelectionPolicy& policy,
                                               std::span<const Token> prefix, std::size_t length,
                                               std::size_t k, Mechanism mechanism,
                                               std::size_t branch, EnumerationBudget budget = {});

double distribution_tv(const SequenceDistribution& a, const SequenceDistribution& b);

/// Replays Hedge with rate `eta` from uniform weights and returns
/// sum_t <p_t, f_t> - min_i sum_t f_t[i].
double exact_hedge_regret(const std::vector<std::vector<double>>& loss_matrix, double eta);

}  // namespace draftsel
