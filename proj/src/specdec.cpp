// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/specdec.hpp"

#include <algorithm>
#include <numeric>

#include "draftsel/error.hpp"

namespace draftsel {

namespace {

constexpr std::size_t kMaxTreeNodes = 1'000'000;

}  // namespace

DraftChunk draft_chain(const DrafterSpec& drafter, std::span<const Token> prefix, std::size_t k,
                       Rng& rng) {
  std::vector<const DrafterSpec*> per_depth(k, &drafter);
  return draft_chain_mixed(per_depth, prefix, rng);
}

DraftChunk draft_chain_mixed(std::span<const DrafterSpec* const> per_depth,
                             std::span<const Token> prefix, Rng& rng) {
  DraftChunk chunk;
  chunk.mechanism = Mechanism::chain;
  chunk.onset = prefix.size();
  chunk.depth = per_depth.size();
  std::vector<Token> context(prefix.begin(), prefix.end());
  for (std::size_t d = 1; d <= per_depth.size(); ++d) {
    const Distribution& q = per_depth[d - 1]->model().next(context, d);
    const Token x = sample_token(q, rng);
    chunk.tokens.push_back(x);
    chunk.draft_dists.push_back(q);
    context.push_back(x);
  }
  return chunk;
}

Distribution residual_distribution(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw Error("size-mismatch", "residual over different vocabularies");
  std::vector<double> r(p.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    r[i] = std::max(0.0, p[i] - q[i]);
    mass += r[i];
  }
  if (mass <= 0.0) throw Error("empty-residual", "p <= q everywhere; acceptance is certain");
  for (double& x : r) x /= mass;
  return Distribution(std::move(r));
}

double overlap_mass(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw Error("size-mismatch", "overlap over different vocabularies");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::min(p[i], q[i]);
  return std::clamp(acc, 0.0, 1.0);
}

VerifiedChunk verify_chain(const ConditionalModel& target, std::span<const Token> prefix,
                           const DraftChunk& chunk, Rng& rng) {
  if (chunk.mechanism != Mechanism::chain) throw Error("mechanism-unsupported", "expected a chain draft");
  VerifiedChunk out;
  std::vector<Token> context(prefix.begin(), prefix.end());
  for (std::size_t k = 0; k < chunk.tokens.size(); ++k) {
    const Distribution& p = target.next(context);
    const Distribution& q = chunk.draft_dists[k];
    const Token x = chunk.tokens[k];
    const auto xi = static_cast<std::size_t>(x);
    if (q[xi] <= 0.0) throw Error("impossible-draft", "drafted token has zero drafter mass");
    out.step_gammas.push_back(overlap_mass(p, q));

    const double ratio = p[xi] / q[xi];
    const double z = rng.uniform();
    if (ratio >= 1.0 - kRatioClamp || z < ratio) {
      out.appended_tokens.push_back(x);
      ++out.accepted_count;
      context.push_back(x);
      continue;
    }
    out.appended_tokens.push_back(sample_token(residual_distribution(p, q), rng));
    return out;
  }
  out.appended_tokens.push_back(sample_token(target.next(context), rng));
  return out;
}

double chain_gamma(const ConditionalModel& target, const DrafterSpec& drafter,
                   std::span<const Token> prefix, std::size_t depth) {
  return overlap_mass(target.next(prefix), drafter.model().next(prefix, depth));
}

std::vector<Token> top_l(const Distribution& q, std::size_t l) {
  std::vector<Token> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  l = std::min(l, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(l), order.end(),
                    [&](Token a, Token b) {
                      const double qa = q[static_cast<std::size_t>(a)];
                      const double qb = q[static_cast<std::size_t>(b)];
                      return qa > qb || (qa == qb && a < b);
                    });
  order.resize(l);
  return order;
}

DraftChunk draft_tree(const DrafterSpec& drafter, std::span<const Token> prefix, std::size_t k,
                      std::size_t l) {
  const ConditionalModel& model = drafter.model();
  if (l == 0 || l > model.vocab_size()) throw Error("invalid-branch", "need 1 <= L <= V");

  DraftChunk tree;
  tree.mechanism = Mechanism::tree;
  tree.onset = prefix.size();
  tree.depth = k;
  tree.branch = l;
  tree.nodes.push_back(TreeNode{});

  std::vector<Token> path;
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    if (tree.nodes[n].depth == k) continue;
    path.clear();
    for (auto i = static_cast<std::int32_t>(n); i > 0; i = tree.nodes[i].parent) {
      path.push_back(tree.nodes[i].token);
    }
    std::vector<Token> context(prefix.begin(), prefix.end());
    context.insert(context.end(), path.rbegin(), path.rend());

    const std::size_t depth = tree.nodes[n].depth + 1;
    const auto children = top_l(model.next(context, depth), l);
    if (tree.nodes.size() + children.size() > kMaxTreeNodes) {
      throw Error("tree-too-large", "draft tree exceeds node budget");
    }
    tree.nodes[n].first_child = tree.nodes.size();
    tree.nodes[n].n_children = children.size();
    for (Token c : children) {
      tree.nodes.push_back(TreeNode{c, static_cast<std::int32_t>(n), depth, 0, 0});
    }
  }
  return tree;
}

double candidate_mass(const Distribution& p, std::span<const Token> candidates) {
  double acc = 0.0;
  for (Token c : candidates) acc += p[static_cast<std::size_t>(c)];
  return std::clamp(acc, 0.0, 1.0);
}

double tree_gamma(const ConditionalModel& target, const DrafterSpec& drafter,
                  std::span<const Token> prefix, std::size_t depth, std::size_t l) {
  const auto candidates = top_l(drafter.model().next(prefix, depth), l);
  return candidate_mass(target.next(prefix), candidates);
}

VerifiedChunk verify_tree(const ConditionalModel& target, std::span<const Token> prefix,
                          const DraftChunk& tree, Rng& rng) {
  if (tree.mechanism != Mechanism::tree) throw Error("mechanism-unsupported", "expected a tree draft");
  VerifiedChunk out;
  std::vector<Token> context(prefix.begin(), prefix.end());
  std::size_t node = 0;
  for (std::size_t level = 1; level <= tree.depth; ++level) {
    const TreeNode& parent = tree.nodes[node];
    const std::span<const TreeNode> children(tree.nodes.data() + parent.first_child,
                                             parent.n_children);
    const Distribution& p = target.next(context);
    double gamma = 0.0;
    for (const auto& c : children) gamma += p[static_cast<std::size_t>(c.token)];
    out.step_gammas.push_back(std::clamp(gamma, 0.0, 1.0));

    const Token x = sample_token(p, rng);
    out.appended_tokens.push_back(x);
    const auto hit = std::find_if(children.begin(), children.end(),
                                  [x](const TreeNode& c) { return c.token == x; });
    if (hit == children.end()) return out;
    ++out.accepted_count;
    context.push_back(x);
    node = parent.first_child + static_cast<std::size_t>(hit - children.begin());
  }
  out.appended_tokens.push_back(sample_token(target.next(context), rng));
  return out;
}

VerifiedChunk speculate_tree_path(const ConditionalModel& target,
                                  std::span<const DrafterSpec* const> per_depth,
                                  std::span<const Token> prefix, std::size_t l, Rng& rng) {
  VerifiedChunk out;
  std::vector<Token> context(prefix.begin(), prefix.end());
  for (std::size_t level = 1; level <= per_depth.size(); ++level) {
    const auto children = top_l(per_depth[level - 1]->model().next(context, level), l);
    const Distribution& p = target.next(context);
    out.step_gammas.push_back(candidate_mass(p, children));
    const Token x = sample_token(p, rng);
    out.appended_tokens.push_back(x);
    if (std::find(children.begin(), children.end(), x) == children.end()) return out;
    ++out.accepted_count;
    context.push_back(x);
  }
  out.appended_tokens.push_back(sample_token(target.next(context), rng));
  return out;
}

}  // namespace draftsel
