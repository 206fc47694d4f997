// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/learners.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "draftsel/error.hpp"

namespace draftsel {

namespace {

void check_loss(const LearnerState& state, std::span<const double> loss) {
  if (loss.size() != state.n_arms) throw Error("size-mismatch", "loss vector length != n_arms");
  for (double l : loss) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error("invalid-loss", "loss entries must lie in [0,1]");
  }
}

void set_uniform(std::vector<double>& w) {
  std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
}

// Normalizes exp(log_w) in place into `out`; uniform if every entry is -inf.
void normalize_log_weights(std::span<const double> log_w, std::vector<double>& out) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (top == -std::numeric_limits<double>::infinity()) {
    set_uniform(out);
    return;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    out[i] = std::exp(log_w[i] - top);
    total += out[i];
  }
  for (double& w : out) w /= total;
}

// Instantaneous regrets <p, loss> - loss_i accumulated into R (and |r| into C).
void accumulate_regret(LearnerState& state, std::span<const double> loss, bool track_abs) {
  double expected = 0.0;
  for (std::size_t i = 0; i < state.n_arms; ++i) expected += state.weights[i] * loss[i];
  for (std::size_t i = 0; i < state.n_arms; ++i) {
    const double r = expected - loss[i];
    state.cumulative_regret[i] += r;
    if (track_abs) state.cumulative_abs_regret[i] += std::abs(r);
    state.cumulative_loss[i] += loss[i];
  }
}

}  // namespace

LearnerState make_learner_state(std::size_t n_arms) {
  if (n_arms == 0) throw Error("invalid-learner", "need at least one arm");
  LearnerState s;
  s.n_arms = n_arms;
  s.weights.assign(n_arms, 1.0 / static_cast<double>(n_arms));
  s.cumulative_loss.assign(n_arms, 0.0);
  s.cumulative_regret.assign(n_arms, 0.0);
  s.cumulative_abs_regret.assign(n_arms, 0.0);
  s.pull_counts.assign(n_arms, 0.0);
  s.reward_sums.assign(n_arms, 0.0);
  s.epoch_loss.assign(n_arms, 0.0);
  return s;
}

void hedge_update(LearnerState& state, std::span<const double> loss, double eta) {
  if (!(eta > 0.0)) throw Error("invalid-eta", "hedge learning rate must be positive");
  check_loss(state, loss);
  const double floor = *std::min_element(loss.begin(), loss.end());
  double total = 0.0;
  for (std::size_t i = 0; i < state.n_arms; ++i) {
    state.weights[i] *= std::exp(-eta * (loss[i] - floor));
    state.cumulative_loss[i] += loss[i];
    state.epoch_loss[i] += loss[i];
    total += state.weights[i];
  }
  if (total > 0.0 && std::isfinite(total)) {
    for (double& w : state.weights) w /= total;
  } else {
    // Every weight underflowed: rebuild from the epoch's cumulative losses.
    std::vector<double> log_w(state.n_arms);
    for (std::size_t i = 0; i < state.n_arms; ++i) log_w[i] = -eta * state.epoch_loss[i];
    normalize_log_weights(log_w, state.weights);
  }
  ++state.round;
}

double normalhedge_scale(std::span<const double> regrets) {
  double max_sq = 0.0;
  for (double r : regrets) max_sq = std::max(max_sq, std::pow(std::max(r, 0.0), 2));
  if (max_sq == 0.0) return 0.0;

  const double n = static_cast<double>(regrets.size());
  auto excess = [&](double c) {
    double acc = 0.0;
    for (double r : regrets) {
      const double rp = std::max(r, 0.0);
      acc += std::exp(rp * rp / (2.0 * c));
    }
    return acc / n - std::numbers::e;
  };

  constexpr int kMaxIterations = 200;
  double lo = 1e-12;
  double hi = max_sq + 1.0;
  int iterations = 0;
  // Grow the bracket geometrically until it straddles the root.
  while (excess(hi) >= 0.0) {
    hi *= 2.0;
    if (++iterations > kMaxIterations) throw Error("potential-solve-failed", "upper bracket");
  }
  while (excess(lo) <= 0.0) {
    lo *= 0.5;
    if (++iterations > kMaxIterations || lo == 0.0) {
      throw Error("potential-solve-failed", "lower bracket");
    }
  }
  // Bisection on log c; stops at relative width 1e-10.
  while (hi - lo > 1e-10 * hi) {
    if (++iterations > kMaxIterations) throw Error("potential-solve-failed", "bisection budget");
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void normalhedge_update(LearnerState& state, std::span<const double> loss) {
  check_loss(state, loss);
  accumulate_regret(state, loss, false);
  ++state.round;

  const double c = normalhedge_scale(state.cumulative_regret);
  state.scale = c;
  if (c == 0.0) {
    set_uniform(state.weights);
    return;
  }
  std::vector<double> log_w(state.n_arms, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < state.n_arms; ++i) {
    const double r = state.cumulative_regret[i];
    if (r > 0.0) log_w[i] = std::log(r / c) + r * r / (2.0 * c);
  }
  normalize_log_weights(log_w, state.weights);
}

void adanormalhedge_update(LearnerState& state, std::span<const double> loss) {
  check_loss(state, loss);
  accumulate_regret(state, loss, true);
  ++state.round;

  // w_i = (Phi(R+1, C+1) - Phi(R-1, C+1)) / 2 with Phi(R, C) = exp([R]_+^2 / (3C)).
  std::vector<double> log_w(state.n_arms);
  for (std::size_t i = 0; i < state.n_arms; ++i) {
    const double r = state.cumulative_regret[i];
    const double c = state.cumulative_abs_regret[i] + 1.0;
    const double a = std::pow(std::max(r + 1.0, 0.0), 2) / (3.0 * c);
    const double b = std::pow(std::max(r - 1.0, 0.0), 2) / (3.0 * c);
    log_w[i] = a > b ? a + std::log1p(-std::exp(b - a)) - std::numbers::ln2
                     : -std::numeric_limits<double>::infinity();
  }
  normalize_log_weights(log_w, state.weights);
}

void exp3_refresh(LearnerState& state, double eta, double exploration) {
  std::vector<double> log_w(state.n_arms);
  for (std::size_t i = 0; i < state.n_arms; ++i) log_w[i] = -eta * state.cumulative_loss[i];
  normalize_log_weights(log_w, state.weights);
  const double mix = 1.0 / static_cast<double>(state.n_arms);
  for (double& w : state.weights) w = (1.0 - exploration) * w + exploration * mix;
}

void exp3_update(LearnerState& state, std::size_t chosen, double observed_loss, double eta,
                 double exploration) {
  if (chosen >= state.n_arms) throw Error("invalid-arm", "arm index out of range");
  if (!(observed_loss >= 0.0 && observed_loss <= 1.0)) {
    throw Error("invalid-loss", "loss must lie in [0,1]");
  }
  if (!(eta > 0.0)) throw Error("invalid-eta", "exp3 learning rate must be positive");
  if (!(exploration >= 0.0 && exploration <= 1.0)) {
    throw Error("invalid-exploration", "exploration must lie in [0,1]");
  }
  const double p = state.weights[chosen];
  if (p <= 0.0) throw Error("support-violation", "chosen arm had zero play probability");
  state.cumulative_loss[chosen] += observed_loss / p;
  state.pull_counts[chosen] += 1.0;
  state.reward_sums[chosen] += 1.0 - observed_loss;
  ++state.round;
  exp3_refresh(state, eta, exploration);
}

std::size_t ucb_select(const LearnerState& state, std::size_t round) {
  for (std::size_t i = 0; i < state.n_arms; ++i) {
    if (state.pull_counts[i] == 0.0) return i;
  }
  const double log_t = std::log(static_cast<double>(std::max<std::size_t>(round, 1)));
  std::size_t best = 0;
  double best_index = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.n_arms; ++i) {
    const double n = state.pull_counts[i];
    const double index = state.reward_sums[i] / n + std::sqrt(2.0 * log_t / n);
    if (index > best_index) {
      best_index = index;
      best = i;
    }
  }
  return best;
}

void ucb_feed(LearnerState& state, std::size_t arm, double reward) {
  if (arm >= state.n_arms) throw Error("invalid-arm", "arm index out of range");
  if (!(reward >= 0.0 && reward <= 1.0)) throw Error("invalid-reward", "reward must lie in [0,1]");
  state.pull_counts[arm] += 1.0;
  state.reward_sums[arm] += reward;
  ++state.round;
}

double default_hedge_eta(std::size_t n_arms, std::size_t horizon) {
  if (n_arms <= 1 || horizon == 0) return 1.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(n_arms)) / static_cast<double>(horizon));
}

double default_exp3_rate(std::size_t n_arms, std::size_t horizon) {
  if (n_arms <= 1 || horizon == 0) return 1.0;
  const double n = static_cast<double>(n_arms);
  return std::min(1.0, std::sqrt(n * std::log(n) / ((std::numbers::e - 1.0) * static_cast<double>(horizon))));
}

Learner::Learner(LearnerParams params)
    : params_(std::move(params)), state_(make_learner_state(params_.n_arms)) {
  if (params_.eta && !(*params_.eta > 0.0)) throw Error("invalid-eta", "eta must be positive");
  if (params_.exploration && !(*params_.exploration >= 0.0 && *params_.exploration <= 1.0)) {
    throw Error("invalid-exploration", "exploration must lie in [0,1]");
  }
}

bool Learner::full_information() const {
  return params_.kind != LearnerKind::exp3 && params_.kind != LearnerKind::ucb;
}

double Learner::hedge_eta() const {
  if (params_.eta) return *params_.eta;
  if (params_.horizon) return default_hedge_eta(state_.n_arms, *params_.horizon);
  // Doubling trick: epoch m spans 2^m rounds.
  const std::size_t epoch_len = std::bit_floor(state_.epoch_start + 1);
  return default_hedge_eta(state_.n_arms, epoch_len);
}

std::vector<double> Learner::predict() const {
  if (params_.kind == LearnerKind::ucb) {
    std::vector<double> p(state_.n_arms, 0.0);
    p[ucb_select(state_, state_.round + 1)] = 1.0;
    return p;
  }
  return state_.weights;
}

std::size_t Learner::choose(Rng& rng) const {
  const double u = rng.uniform();
  if (params_.kind == LearnerKind::ucb) return ucb_select(state_, state_.round + 1);
  double cdf = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < state_.n_arms; ++i) {
    if (state_.weights[i] <= 0.0) continue;
    last = i;
    cdf += state_.weights[i];
    if (u < cdf) return i;
  }
  return last;
}

void Learner::update(std::span<const double> loss) {
  switch (params_.kind) {
    case LearnerKind::hedge: {
      hedge_update(state_, loss, hedge_eta());
      if (!params_.eta && !params_.horizon && state_.round == 2 * state_.epoch_start + 1) {
        // New doubling epoch: restart from uniform weights.
        state_.epoch_start = state_.round;
        set_uniform(state_.weights);
        std::fill(state_.epoch_loss.begin(), state_.epoch_loss.end(), 0.0);
      }
      return;
    }
    case LearnerKind::normalhedge:
      normalhedge_update(state_, loss);
      return;
    case LearnerKind::adanormalhedge:
      adanormalhedge_update(state_, loss);
      return;
    case LearnerKind::exp3:
    case LearnerKind::ucb:
      throw Error("mechanism-unsupported", "bandit learners take feed(), not full losses");
  }
}

void Learner::feed(std::size_t arm, double loss) {
  switch (params_.kind) {
    case LearnerKind::exp3: {
      const std::size_t horizon = params_.horizon.value_or(1000);
      const double rate = default_exp3_rate(state_.n_arms, horizon);
      exp3_update(state_, arm, loss, params_.eta.value_or(rate), params_.exploration.value_or(rate));
      return;
    }
    case LearnerKind::ucb:
      ucb_feed(state_, arm, 1.0 - loss);
      return;
    default:
      throw Error("mechanism-unsupported", "full-information learners take update()");
  }
}

void DelayQueue::push(TimedLoss loss) {
  if (!seen.insert(loss.t).second) {
    throw Error("replayed-feedback", "loss for round " + std::to_string(loss.t) + " pushed twice");
  }
  auto pos = pending.end();
  while (pos != pending.begin() && std::prev(pos)->t > loss.t) --pos;
  pending.insert(pos, std::move(loss));
}

void DelayQueue::drain_into(Learner& base) {
  while (!pending.empty()) {
    base.update(pending.front().loss);
    applied.push_back(pending.front().t);
    pending.pop_front();
  }
}

std::vector<double> qfid_step(DelayQueue& queue, Learner& base, std::span<const TimedLoss> arrivals,
                              bool apply_now) {
  for (const auto& loss : arrivals) queue.push(loss);
  if (apply_now) queue.drain_into(base);
  return base.predict();
}

bool skip_policy(std::size_t round, std::size_t warmup, std::size_t batch,
                 [[maybe_unused]] std::size_t skip) {
  if (round < warmup || batch <= 1) return true;
  return (round - warmup + 1) % batch == 0;
}

bool skip_contributes(std::size_t token, std::size_t round, std::size_t warmup, std::size_t skip) {
  if (round < warmup || skip <= 1) return true;
  return token % skip == 0;
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::hedge: return "hedge";
    case LearnerKind::normalhedge: return "normalhedge";
    case LearnerKind::adanormalhedge: return "adanormalhedge";
    case LearnerKind::exp3: return "exp3";
    case LearnerKind::ucb: return "ucb";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(const std::string& name) {
  for (auto k : {LearnerKind::hedge, LearnerKind::normalhedge, LearnerKind::adanormalhedge,
                 LearnerKind::exp3, LearnerKind::ucb}) {
    if (to_string(k) == name) return k;
  }
  throw Error("config-invalid", "learner: unknown learner '" + name + "'");
}

}  // namespace draftsel
