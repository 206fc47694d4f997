// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "draftsel/error.hpp"

namespace draftsel {

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error("invalid-distribution", "empty probability vector");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw Error("invalid-distribution", "negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw Error("invalid-distribution", "entries sum to " + std::to_string(total));
  }
}

Distribution Distribution::uniform(std::size_t vocab_size) {
  return Distribution(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
}

Distribution Distribution::one_hot(std::size_t vocab_size, Token token) {
  std::vector<double> probs(vocab_size, 0.0);
  probs.at(static_cast<std::size_t>(token)) = 1.0;
  return Distribution(std::move(probs));
}

double tv_distance(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw Error("size-mismatch", "tv_distance over different vocabularies");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

Token sample_token(const Distribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double cdf = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last_positive = i;
    cdf += dist[i];
    if (u < cdf) return static_cast<Token>(i);
  }
  // u fell into the rounding gap above the accumulated mass.
  return static_cast<Token>(last_positive);
}

ConditionalModel ConditionalModel::context_free(Distribution row) {
  ConditionalModel m;
  m.order_ = 0;
  m.vocab_size_ = row.size();
  m.table_.push_back(std::move(row));
  return m;
}

ConditionalModel ConditionalModel::bigram(ContextTable rows) {
  if (rows.empty()) throw Error("invalid-model", "bigram model needs rows");
  ConditionalModel m;
  m.order_ = 1;
  m.vocab_size_ = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != m.vocab_size_) throw Error("size-mismatch", "bigram rows differ in size");
  }
  m.table_ = std::move(rows);
  return m;
}

ConditionalModel ConditionalModel::with_depth_variants(std::vector<ContextTable> variants) const {
  for (const auto& t : variants) {
    if (t.size() != table_.size()) throw Error("invalid-model", "depth variant table shape");
    for (const auto& r : t) {
      if (r.size() != vocab_size_) throw Error("size-mismatch", "depth variant row size");
    }
  }
  ConditionalModel m = *this;
  m.depth_variants_ = std::move(variants);
  return m;
}

const Distribution& ConditionalModel::next(std::span<const Token> prefix, std::size_t depth) const {
  if (depth == 0) throw Error("invalid-depth", "depth starts at 1");
  const ContextTable& table =
      depth_variants_.empty() ? table_
                              : depth_variants_[std::min(depth, depth_variants_.size()) - 1];
  if (order_ == 0) return table.front();
  if (prefix.empty()) throw Error("context-missing", "order-1 model needs a non-empty prefix");
  const Token ctx = prefix.back();
  if (ctx < 0 || static_cast<std::size_t>(ctx) >= table.size()) {
    throw Error("context-missing", "no row for context " + std::to_string(ctx));
  }
  return table[static_cast<std::size_t>(ctx)];
}

const Distribution& conditional_dist(const ConditionalModel& model,
                                     std::span<const Token> prefix,
                                     std::size_t depth) {
  return model.next(prefix, depth);
}

AcceptanceProcess::AcceptanceProcess(std::vector<double> per_depth_gamma)
    : per_depth_(std::move(per_depth_gamma)) {
  if (per_depth_.empty()) throw Error("invalid-process", "need at least one gamma");
  for (double g : per_depth_) {
    if (!(g >= 0.0 && g <= 1.0)) throw Error("invalid-process", "gamma outside [0,1]");
  }
}

double AcceptanceProcess::at(std::size_t depth) const {
  if (depth == 0) throw Error("invalid-depth", "depth starts at 1");
  return per_depth_[std::min(depth, per_depth_.size()) - 1];
}

const ConditionalModel& DrafterSpec::model() const {
  if (const auto* m = std::get_if<ConditionalModel>(&kind)) return *m;
  throw Error("mechanism-unsupported", "drafter " + std::to_string(id) + " is an acceptance process");
}

const AcceptanceProcess& DrafterSpec::process() const {
  if (const auto* p = std::get_if<AcceptanceProcess>(&kind)) return *p;
  throw Error("mechanism-unsupported", "drafter " + std::to_string(id) + " is distribution-based");
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw Error("config-invalid", key + ": " + why);
  };
  if (vocab_size < 2) fail("vocab_size", "must be >= 2");
  if (n_drafters < 1) fail("n_drafters", "must be >= 1");
  if (vocab_size < n_drafters) fail("vocab_size", "must be >= n_drafters (one context block per drafter)");
  if (draft_depth < 1) fail("draft_depth", "must be >= 1");
  if (branch_factor < 1) fail("branch_factor", "must be >= 1");
  if (branch_factor > vocab_size) fail("branch_factor", "must be <= vocab_size");
  if (!(in_domain_tv >= 0.0 && in_domain_tv <= 1.0)) fail("in_domain_tv", "must lie in [0,1]");
  if (!(off_domain_tv >= 0.0 && off_domain_tv <= 1.0)) fail("off_domain_tv", "must lie in [0,1]");
  if (!(in_domain_tv < off_domain_tv)) fail("in_domain_tv", "must be < off_domain_tv");
  if (episode_tokens <= 2 * draft_depth + 1) {
    fail("episode_tokens",
         "must exceed 2*draft_depth+1 (delayed-feedback regret bound requires T_token > 2K+1)");
  }
  if (prompt_domain && *prompt_domain >= n_drafters) fail("prompt_domain", "must be < n_drafters or \"mixed\"");
}

std::size_t SpecialistPool::block_of(Token context) const {
  const std::size_t v = target.vocab_size();
  return static_cast<std::size_t>(context) * n_blocks / v;
}

Token SpecialistPool::block_start(std::size_t block) const {
  const std::size_t v = target.vocab_size();
  return static_cast<Token>((block * v + n_blocks - 1) / n_blocks);
}

Distribution tv_shifted_row(const Distribution& p, double tv, Rng& away) {
  if (tv <= 0.0) return p;
  std::vector<std::size_t> feasible;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (1.0 - p[j] >= tv) feasible.push_back(j);
  }
  if (feasible.empty()) {
    throw Error("tv-unreachable", "no token leaves room for tv " + std::to_string(tv));
  }
  const std::size_t j = feasible[away.below(feasible.size())];

  auto mix = [&](double lambda) {
    std::vector<double> q(p.size());
    for (std::size_t x = 0; x < p.size(); ++x) q[x] = (1.0 - lambda) * p[x];
    q[j] += lambda;
    return q;
  };
  auto distance = [&](const std::vector<double>& q) {
    double acc = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) acc += std::abs(p[x] - q[x]);
    return 0.5 * acc;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (distance(mix(mid)) < tv ? lo : hi) = mid;
  }
  std::vector<double> q = mix(0.5 * (lo + hi));
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& x : q) x /= total;
  return Distribution(std::move(q));
}

namespace {

// Skewed random weights over `tokens`, normalized to `mass`.
void add_block_mass(std::vector<double>& row, std::size_t first, std::size_t last, double mass,
                    Rng& rng) {
  std::vector<double> w(last - first);
  for (double& x : w) {
    const double u = rng.uniform();
    x = u * u * u + 1e-3;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) row[first + i] += mass * w[i] / total;
}

}  // namespace

SpecialistPool make_specialist_pool(const ScenarioConfig& config) {
  config.validate();
  const std::size_t v = config.vocab_size;
  const std::size_t n = config.n_drafters;

  SpecialistPool pool;
  pool.n_blocks = n;
  auto block_range = [&](std::size_t b) {
    return std::pair{(b * v + n - 1) / n, ((b + 1) * v + n - 1) / n};
  };

  // A domain prompt pulls every continuation back into that domain's block;
  // mixed prompts follow the block of the current context and wander.
  const double leak = config.prompt_domain ? 0.05 : 0.6;
  Rng target_rng(derive_seed(config.seed, 0));
  ContextTable rows;
  rows.reserve(v);
  for (std::size_t c = 0; c < v; ++c) {
    std::vector<double> row(v, 0.0);
    const std::size_t b =
        config.prompt_domain ? *config.prompt_domain : static_cast<std::size_t>(c) * n / v;
    const auto [first, last] = block_range(b);
    add_block_mass(row, first, last, 1.0 - leak, target_rng);
    add_block_mass(row, 0, v, leak, target_rng);
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& x : row) x /= total;
    rows.emplace_back(std::move(row));
  }
  pool.target = ConditionalModel::bigram(rows);

  for (std::size_t i = 0; i < n; ++i) {
    Rng away(derive_seed(config.seed, 1 + i));
    ContextTable drafter_rows;
    drafter_rows.reserve(v);
    for (std::size_t c = 0; c < v; ++c) {
      const bool in_domain = static_cast<std::size_t>(c) * n / v == i;
      drafter_rows.push_back(
          tv_shifted_row(rows[c], in_domain ? config.in_domain_tv : config.off_domain_tv, away));
    }
    pool.drafters.push_back(DrafterSpec{i, ConditionalModel::bigram(std::move(drafter_rows)),
                                        "domain-" + std::to_string(i)});
  }
  return pool;
}

}  // namespace draftsel
