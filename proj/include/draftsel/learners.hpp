// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "draftsel/evaluation.hpp"
#include "draftsel/random.hpp"

namespace draftsel {

enum class LearnerKind { hedge, normalhedge, adanormalhedge, exp3, ucb };

/// Mutable state shared by every learner family. Fields a family does not
/// use stay at zero.
struct LearnerState {
  std::size_t n_arms = 0;
  std::vector<double> weights;                // play distribution p_t
  std::vector<double> cumulative_loss;        // Hedge: sum of losses; EXP3: estimated losses
  std::vector<double> cumulative_regret;      // R_i (NormalHedge family)
  std::vector<double> cumulative_abs_regret;  // C_i (AdaNormalHedge)
  std::vector<double> pull_counts;
  std::vector<double> reward_sums;
  std::size_t round = 0;
  double scale = 0.0;  // last NormalHedge c_t

  // Hedge doubling-trick bookkeeping (unused when the horizon is known).
  std::size_t epoch_start = 0;
  std::vector<double> epoch_loss;
};

/// Uniform weights, zero counters.
LearnerState make_learner_state(std::size_t n_arms);

/// w_i <- w_i exp(-eta loss_i), renormalized. Throws on eta <= 0.
void hedge_update(LearnerState& state, std::span<const double> loss, double eta);

/// Solves (1/N) sum_i exp([R_i]_+^2 / (2c)) = e for c by bisection.
/// Throws "potential-solve-failed" after 200 iterations.
double normalhedge_scale(std::span<const double> regrets);

void normalhedge_update(LearnerState& state, std::span<const double> loss);

void adanormalhedge_update(LearnerState& state, std::span<const double> loss);

/// Importance-weighted bandit update; weights become the mixed play law.
/// Throws "support-violation" when the chosen arm had zero probability.
void exp3_update(LearnerState& state, std::size_t chosen, double observed_loss, double eta,
                 double exploration);

/// EXP3 play law for the current estimated losses.
void exp3_refresh(LearnerState& state, double eta, double exploration);

/// Unplayed arms first (by index), then argmax mean + sqrt(2 ln t / n).
std::size_t ucb_select(const LearnerState& state, std::size_t round);
void ucb_feed(LearnerState& state, std::size_t arm, double reward);

/// Defaults used when no explicit rate is configured.
double default_hedge_eta(std::size_t n_arms, std::size_t horizon);
double default_exp3_rate(std::size_t n_arms, std::size_t horizon);

struct LearnerParams {
  LearnerKind kind = LearnerKind::normalhedge;
  std::size_t n_arms = 1;
  /// Known number of rounds; nullopt selects the anytime doubling trick for Hedge.
  std::optional<std::size_t> horizon;
  std::optional<double> eta;
  std::optional<double> exploration;
};

/// Predict/update wrapper over LearnerState for one learner family.
class Learner {
 public:
  explicit Learner(LearnerParams params);

  LearnerKind kind() const { return params_.kind; }
  bool full_information() const;
  const LearnerState& state() const { return state_; }

  /// Current play distribution (UCB reports a point mass on its next pick).
  std::vector<double> predict() const;
  /// Draws an arm from predict(); always consumes one uniform (UCB discards it).
  std::size_t choose(Rng& rng) const;

  /// Full-information update with a loss vector.
  void update(std::span<const double> loss);
  /// Bandit update with the chosen arm's loss in [0,1].
  void feed(std::size_t arm, double loss);

  double hedge_eta() const;

 private:
  LearnerParams params_;
  LearnerState state_;
};

/// FIFO queue of unprocessed loss vectors with an exactly-once audit.
struct DelayQueue {
  std::deque<TimedLoss> pending;
  std::set<std::size_t> seen;
  std::vector<std::size_t> applied;  // t of every loss handed to the learner, in order

  /// Enqueues in t order. Throws "replayed-feedback" on a repeated t.
  void push(TimedLoss loss);
  /// Feeds every pending loss to `base` in t order.
  void drain_into(Learner& base);
};

/// One QFI-D round: enqueue `arrivals`, catch `base` up with everything
/// queued (when `apply_now`), and return the play distribution.
std::vector<double> qfid_step(DelayQueue& queue, Learner& base, std::span<const TimedLoss> arrivals,
                              bool apply_now = true);

/// Whether queued feedback is applied at `round`: always during warmup,
/// then once every `batch` rounds.
bool skip_policy(std::size_t round, std::size_t warmup, std::size_t batch, std::size_t skip);

/// Whether token `token` (0-based) contributes a loss: every token during
/// warmup, then one token in `skip`.
bool skip_contributes(std::size_t token, std::size_t round, std::size_t warmup, std::size_t skip);

std::string to_string(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& name);

}  // namespace draftsel
