// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "draftsel/random.hpp"
#include "draftsel/vocab.hpp"

namespace draftsel {

enum class Mechanism { chain, tree };

/// Ratios p/q at or above 1 - kRatioClamp count as certain acceptance.
inline constexpr double kRatioClamp = 1e-12;

struct TreeNode {
  Token token = -1;          // -1 for the root
  std::int32_t parent = -1;  // index into DraftChunk::nodes
  std::size_t depth = 0;
  std::size_t first_child = 0;
  std::size_t n_children = 0;
};

/// One speculative draft: a K-token chain or a depth-K, width-L greedy tree.
struct DraftChunk {
  Mechanism mechanism = Mechanism::chain;
  std::size_t onset = 0;
  std::size_t depth = 0;
  std::size_t branch = 1;

  // chain: drafted tokens and the drafter law each was drawn from
  std::vector<Token> tokens;
  std::vector<Distribution> draft_dists;

  // tree: breadth-first nodes, root first; children of a node are contiguous
  std::vector<TreeNode> nodes;
};

struct VerifiedChunk {
  std::size_t accepted_count = 0;
  std::vector<Token> appended_tokens;  // accepted drafts + one correction/bonus token
  std::vector<double> step_gammas;     // acceptance probability at each traversed step
};

/// Autoregressive K-token draft from `drafter` (depth index passed through).
/// Throws "mechanism-unsupported" for acceptance-process drafters.
DraftChunk draft_chain(const DrafterSpec& drafter, std::span<const Token> prefix, std::size_t k,
                       Rng& rng);

/// Chain draft where depth d is drawn by `per_depth[d-1]`.
DraftChunk draft_chain_mixed(std::span<const DrafterSpec* const> per_depth,
                             std::span<const Token> prefix, Rng& rng);

/// max(0, p - q) renormalized. Throws "empty-residual" when p == q.
Distribution residual_distribution(const Distribution& p, const Distribution& q);

/// Accept/reject loop with residual resampling and the bonus token.
VerifiedChunk verify_chain(const ConditionalModel& target, std::span<const Token> prefix,
                           const DraftChunk& chunk, Rng& rng);

/// sum_x min(p(x), q(x)) = 1 - TV(p, q).
double overlap_mass(const Distribution& p, const Distribution& q);

/// Chain acceptance probability of `drafter` at `depth` after `prefix`.
double chain_gamma(const ConditionalModel& target, const DrafterSpec& drafter,
                   std::span<const Token> prefix, std::size_t depth);

/// The L most probable tokens of `q`, ties broken by smaller token id.
std::vector<Token> top_l(const Distribution& q, std::size_t l);

/// Deterministic greedy draft tree.
DraftChunk draft_tree(const DrafterSpec& drafter, std::span<const Token> prefix, std::size_t k,
                      std::size_t l);

/// Target mass on an explicit candidate set (the children of a node).
double candidate_mass(const Distribution& p, std::span<const Token> candidates);

/// Tree acceptance probability: target mass on Top_L(q_depth(.|prefix)).
double tree_gamma(const ConditionalModel& target, const DrafterSpec& drafter,
                  std::span<const Token> prefix, std::size_t depth, std::size_t l);

/// Walks the tree: sample from the target, descend on a child hit, stop on a
/// miss (appending the target's own sample), bonus token at full depth.
VerifiedChunk verify_tree(const ConditionalModel& target, std::span<const Token> prefix,
                          const DraftChunk& tree, Rng& rng);

/// Same outcome as draft_tree followed by verify_tree, but expands only the
/// nodes on the realized path. Depth d uses `per_depth[d-1]`.
VerifiedChunk speculate_tree_path(const ConditionalModel& target,
                                  std::span<const DrafterSpec* const> per_depth,
                                  std::span<const Token> prefix, std::size_t l, Rng& rng);

}  // namespace draftsel
