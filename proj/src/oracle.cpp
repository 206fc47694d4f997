// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "draftsel/error.hpp"

namespace draftsel {

namespace {

using Row = std::vector<double>;

Row row_of(const Distribution& d) { return Row(d.probs().begin(), d.probs().end()); }

Row target_row(const ConditionalModel& target, const std::vector<Token>& ctx) {
  return row_of(target.next(ctx, 1));
}

Row drafter_row(const DrafterSpec& drafter, const std::vector<Token>& ctx, std::size_t depth) {
  return row_of(drafter.model().next(ctx, depth));
}

double sum_min(const Row& p, const Row& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] < q[i] ? p[i] : q[i];
  return s;
}

// Indices of the l largest entries; ties broken toward the smaller index.
std::vector<bool> largest_l(const Row& q, std::size_t l) {
  std::vector<bool> chosen(q.size(), false);
  for (std::size_t round = 0; round < l && round < q.size(); ++round) {
    std::size_t best = q.size();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (chosen[i]) continue;
      if (best == q.size() || q[i] > q[best]) best = i;
    }
    chosen[best] = true;
  }
  return chosen;
}

// Probability that a target draw x is accepted by the mechanism, as a
// fraction of p(x).
Row conditional_acceptance(const Row& p, const Row& q, Mechanism mechanism, std::size_t branch) {
  Row a(p.size(), 0.0);
  if (mechanism == Mechanism::chain) {
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (p[x] > 0.0) a[x] = std::min(p[x], q[x]) / p[x];
    }
  } else {
    const auto in = largest_l(q, branch);
    for (std::size_t x = 0; x < p.size(); ++x) a[x] = in[x] ? 1.0 : 0.0;
  }
  return a;
}

double own_gamma(const Row& p, const Row& q, Mechanism mechanism, std::size_t branch) {
  if (mechanism == Mechanism::chain) return sum_min(p, q);
  const auto in = largest_l(q, branch);
  double s = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (in[x]) s += p[x];
  }
  return s;
}

// Closed-form estimator: sum_k k (1 - g_k) prod_{j<k} g_j + (K+1) prod g.
double own_estimate(const Row& g) {
  double survive = 1.0;
  double total = 0.0;
  for (std::size_t k = 1; k <= g.size(); ++k) {
    total += static_cast<double>(k) * (1.0 - g[k - 1]) * survive;
    survive *= g[k - 1];
  }
  return total + static_cast<double>(g.size() + 1) * survive;
}

void check_budget(std::size_t vocab, std::size_t depth, EnumerationBudget budget) {
  double states = 1.0;
  for (std::size_t i = 0; i < depth; ++i) states *= static_cast<double>(vocab);
  if (states > static_cast<double>(budget.max_states)) {
    throw Error("budget-exceeded", std::to_string(vocab) + "^" + std::to_string(depth) + " > " +
                                       std::to_string(budget.max_states));
  }
}

void check_branch(const ConditionalModel& target, Mechanism mechanism, std::size_t branch) {
  if (mechanism == Mechanism::tree && (branch == 0 || branch > target.vocab_size())) {
    throw Error("invalid-branch", "branch must lie in [1, V]");
  }
}

struct Counter {
  std::size_t used = 0;
  std::size_t cap = 0;
  void tick() {
    if (++used > cap) throw Error("budget-exceeded", "more than " + std::to_string(cap) + " states");
  }
};

}  // namespace

double brute_expected_accept_length(const ConditionalModel* target, const DrafterSpec& drafter,
                                    std::span<const Token> prefix, std::size_t k,
                                    Mechanism mechanism, std::size_t branch,
                                    EnumerationBudget budget) {
  if (k == 0) throw Error("invalid-depth", "K must be >= 1");
  if (!drafter.distribution_based()) {
    // Expected length = sum over j of P(first j drafts accepted).
    double survive = 1.0;
    double expected = 1.0;
    for (std::size_t d = 1; d <= k; ++d) {
      survive *= drafter.process().at(d);
      expected += survive;
    }
    return expected;
  }
  if (!target) throw Error("mechanism-unsupported", "distribution drafter needs a target");
  check_branch(*target, mechanism, branch);
  check_budget(target->vocab_size(), k, budget);

  // Expected length once `depth - 1` drafts have been accepted at context `ctx`.
  std::function<double(std::vector<Token>&, std::size_t)> rec = [&](std::vector<Token>& ctx,
                                                                    std::size_t depth) -> double {
    if (depth > k) return static_cast<double>(k + 1);
    const Row p = target_row(*target, ctx);
    const Row q = drafter_row(drafter, ctx, depth);
    const Row a = conditional_acceptance(p, q, mechanism, branch);
    double total = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (p[x] == 0.0) continue;
      double value = (1.0 - a[x]) * static_cast<double>(depth);
      if (a[x] > 0.0) {
        ctx.push_back(static_cast<Token>(x));
        value += a[x] * rec(ctx, depth + 1);
        ctx.pop_back();
      }
      total += p[x] * value;
    }
    return total;
  };
  std::vector<Token> ctx(prefix.begin(), prefix.end());
  return rec(ctx, 1);
}

double exact_estimator_expectation(const ConditionalModel* target, const DrafterSpec& drafter,
                                   std::span<const Token> prefix, std::size_t k,
                                   Mechanism mechanism, std::size_t branch,
                                   EnumerationBudget budget) {
  if (k == 0) throw Error("invalid-depth", "K must be >= 1");
  if (!drafter.distribution_based()) {
    Row g(k);
    for (std::size_t d = 1; d <= k; ++d) g[d - 1] = drafter.process().at(d);
    return own_estimate(g);
  }
  if (!target) throw Error("mechanism-unsupported", "distribution drafter needs a target");
  check_branch(*target, mechanism, branch);
  check_budget(target->vocab_size(), k - 1, budget);

  Row g;
  std::function<double(std::vector<Token>&, std::size_t)> rec = [&](std::vector<Token>& ctx,
                                                                    std::size_t pos) -> double {
    const Row p = target_row(*target, ctx);
    g.push_back(own_gamma(p, drafter_row(drafter, ctx, pos), mechanism, branch));
    double value = 0.0;
    if (pos == k) {
      value = own_estimate(g);
    } else {
      for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] == 0.0) continue;
        ctx.push_back(static_cast<Token>(x));
        value += p[x] * rec(ctx, pos + 1);
        ctx.pop_back();
      }
    }
    g.pop_back();
    return value;
  };
  std::vector<Token> ctx(prefix.begin(), prefix.end());
  return rec(ctx, 1);
}

SequenceDistribution target_sequence_distribution(const ConditionalModel& target,
                                                  std::span<const Token> prefix,
                                                  std::size_t length, EnumerationBudget budget) {
  check_budget(target.vocab_size(), length, budget);
  SequenceDistribution out;
  std::vector<Token> ctx(prefix.begin(), prefix.end());
  std::vector<Token> seq;
  std::function<void(double)> rec = [&](double prob) {
    if (seq.size() == length) {
      out[seq] += prob;
      return;
    }
    const Row p = target_row(target, ctx);
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (p[x] == 0.0) continue;
      ctx.push_back(static_cast<Token>(x));
      seq.push_back(static_cast<Token>(x));
      rec(prob * p[x]);
      seq.pop_back();
      ctx.pop_back();
    }
  };
  rec(1.0);
  return out;
}

SelectionPolicy fixed_policy(std::size_t arm, std::size_t n_arms) {
  if (arm >= n_arms) throw Error("invalid-arm", "arm out of range");
  return [arm, n_arms](std::span<const Token>, std::size_t) {
    std::vector<double> w(n_arms, 0.0);
    w[arm] = 1.0;
    return w;
  };
}

SelectionPolicy round_robin_policy(std::size_t n_arms) {
  if (n_arms == 0) throw Error("invalid-arm", "empty pool");
  return [n_arms](std::span<const Token>, std::size_t chunk) {
    std::vector<double> w(n_arms, 0.0);
    w[chunk % n_arms] = 1.0;
    return w;
  };
}

SelectionPolicy hedge_policy(const ConditionalModel& target, std::span<const DrafterSpec> pool,
                             std::span<const Token> prompt, double eta) {
  std::vector<DrafterSpec> arms(pool.begin(), pool.end());
  std::vector<Token> start(prompt.begin(), prompt.end());
  return [&target, arms, start, eta](std::span<const Token> generated, std::size_t) {
    std::vector<double> loss(arms.size(), 0.0);
    std::vector<Token> ctx = start;
    for (Token x : generated) {
      const Row p = target_row(target, ctx);
      for (std::size_t i = 0; i < arms.size(); ++i) {
        loss[i] += 1.0 - sum_min(p, drafter_row(arms[i], ctx, 1));
      }
      ctx.push_back(x);
    }
    std::vector<double> w(arms.size());
    double z = 0.0;
    for (std::size_t i = 0; i < arms.size(); ++i) z += w[i] = std::exp(-eta * loss[i]);
    for (double& v : w) v /= z;
    return w;
  };
}

SequenceDistribution brute_output_distribution(const ConditionalModel& target,
                                               std::span<const DrafterSpec> pool,
                                               const SelectionPolicy& policy,
                                               std::span<const Token> prefix, std::size_t length,
                                               std::size_t k, Mechanism mechanism,
                                               std::size_t branch, EnumerationBudget budget) {
  if (k == 0) throw Error("invalid-depth", "K must be >= 1");
  if (pool.empty()) throw Error("invalid-pool", "empty drafter pool");
  for (const auto& d : pool) {
    if (!d.distribution_based()) {
      throw Error("mechanism-unsupported", "output distribution needs distribution drafters");
    }
  }
  check_branch(target, mechanism, branch);
  check_budget(target.vocab_size(), length, budget);

  Counter counter{0, budget.max_states};
  SequenceDistribution out;
  std::vector<Token> ctx(prefix.begin(), prefix.end());
  std::vector<Token> seq;
  std::function<void(double, std::size_t)> next_chunk;

  auto emit = [&](Token x, double prob, std::size_t chunk, auto&& continue_chunk) {
    ctx.push_back(x);
    seq.push_back(x);
    continue_chunk(prob, chunk);
    seq.pop_back();
    ctx.pop_back();
  };
  // The chunk ends after token x: either the episode is long enough or a new
  // chunk starts.
  auto close = [&](double prob, std::size_t chunk) {
    if (seq.size() >= length) {
      out[std::vector<Token>(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(length))] += prob;
    } else {
      next_chunk(prob, chunk + 1);
    }
  };

  std::function<void(const DrafterSpec&, std::size_t, double, std::size_t)> in_chunk =
      [&](const DrafterSpec& d, std::size_t depth, double prob, std::size_t chunk) {
        counter.tick();
        if (seq.size() >= length) {
          out[std::vector<Token>(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(length))] +=
              prob;
          return;
        }
        const Row p = target_row(target, ctx);
        if (depth > k) {
          for (std::size_t x = 0; x < p.size(); ++x) {
            if (p[x] > 0.0) emit(static_cast<Token>(x), prob * p[x], chunk, close);
          }
          return;
        }
        const Row q = drafter_row(d, ctx, depth);
        auto descend = [&](double pr, std::size_t ch) { in_chunk(d, depth + 1, pr, ch); };
        if (mechanism == Mechanism::chain) {
          // Draft x ~ q, kept with probability min(1, p/q); a rejection
          // resamples from max(0, p - q), whose unnormalized mass is exactly
          // the probability of reaching it.
          for (std::size_t x = 0; x < p.size(); ++x) {
            const double keep = std::min(p[x], q[x]);
            if (keep > 0.0) emit(static_cast<Token>(x), prob * keep, chunk, descend);
          }
          for (std::size_t x = 0; x < p.size(); ++x) {
            const double fix = p[x] - q[x];
            if (fix > 0.0) emit(static_cast<Token>(x), prob * fix, chunk, close);
          }
        } else {
          const auto children = largest_l(q, branch);
          for (std::size_t x = 0; x < p.size(); ++x) {
            if (p[x] == 0.0) continue;
            if (children[x]) {
              emit(static_cast<Token>(x), prob * p[x], chunk, descend);
            } else {
              emit(static_cast<Token>(x), prob * p[x], chunk, close);
            }
          }
        }
      };

  next_chunk = [&](double prob, std::size_t chunk) {
    const std::vector<Token> generated = seq;
    const std::vector<double> w = policy(generated, chunk);
    if (w.size() != pool.size()) throw Error("invalid-policy", "weight vector size != pool size");
    for (std::size_t a = 0; a < pool.size(); ++a) {
      if (w[a] > 0.0) in_chunk(pool[a], 1, prob * w[a], chunk);
    }
  };
  next_chunk(1.0, 0);
  return out;
}

double distribution_tv(const SequenceDistribution& a, const SequenceDistribution& b) {
  double total = 0.0;
  for (const auto& [seq, pa] : a) {
    const auto it = b.find(seq);
    total += std::abs(pa - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [seq, pb] : b) {
    if (!a.contains(seq)) total += std::abs(pb);
  }
  return 0.5 * total;
}

double exact_hedge_regret(const std::vector<std::vector<double>>& loss_matrix, double eta) {
  if (loss_matrix.empty()) return 0.0;
  const std::size_t n = loss_matrix.front().size();
  std::vector<double> cumulative(n, 0.0);
  double expected = 0.0;
  for (const auto& f : loss_matrix) {
    if (f.size() != n) throw Error("size-mismatch", "ragged loss matrix");
    const double floor = *std::min_element(cumulative.begin(), cumulative.end());
    std::vector<double> w(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += w[i] = std::exp(-eta * (cumulative[i] - floor));
    for (std::size_t i = 0; i < n; ++i) {
      expected += w[i] / z * f[i];
      cumulative[i] += f[i];
    }
  }
  return expected - *std::min_element(cumulative.begin(), cumulative.end());
}

}  // namespace draftsel
