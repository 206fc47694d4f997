// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/harness.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "draftsel/error.hpp"
#include "draftsel/parallel.hpp"
#include "draftsel/report.hpp"

namespace draftsel {

namespace {

LossKind resolve_kind(LossKind configured, std::size_t round, std::size_t hybrid_warmup) {
  return configured == LossKind::hybrid ? hybrid_loss_schedule(round, hybrid_warmup) : configured;
}

bool depth_sensitive(const DrafterSpec& d) {
  return !d.distribution_based() || d.model().time_inhomogeneous();
}

// Episode state threaded through the chunk loop.
class Episode {
 public:
  Episode(const RunConfig& config, const EpisodeSetup& setup, std::uint64_t seed)
      : config_(config),
        setup_(setup),
        n_(setup.pool.size()),
        k_(config.scenario.draft_depth),
        rng_(seed),
        learner_(make_params()),
        history_(setup.prompt) {
    if (n_ == 0) throw Error("invalid-pool", "empty drafter pool");
    for (const auto& d : setup.pool) {
      if (d.distribution_based() && !setup.target) {
        throw Error("mechanism-unsupported", "distribution drafters need a target model");
      }
    }
    log_.n_arms = n_;
    log_.draft_depth = k_;
    log_.game = config.learner.game;
  }

  EpisodeLog run() {
    while (generated() < config_.scenario.episode_tokens) step();
    log_.tokens_generated = generated();
    log_.losses_applied =
        config_.learner.delay_mode == DelayMode::qfid ? queue_.applied.size() : direct_applied_;
    return std::move(log_);
  }

 private:
  LearnerParams make_params() const {
    LearnerParams p;
    p.kind = config_.learner.learner;
    p.n_arms = setup_.pool.size();
    const bool token_rounds = config_.learner.game == Game::token;
    if (p.kind != LearnerKind::hedge || token_rounds) p.horizon = config_.scenario.episode_tokens;
    p.eta = config_.learner.eta;
    p.exploration = config_.learner.exploration;
    return p;
  }

  std::size_t generated() const { return history_.size() - setup_.prompt.size(); }
  const ConditionalModel* target() const { return setup_.target ? &*setup_.target : nullptr; }

  // Prefix of the full sequence before generated token t (1-based).
  std::span<const Token> prefix_before(std::size_t t) const {
    return std::span<const Token>(history_).first(setup_.prompt.size() + t - 1);
  }

  void step() {
    const std::size_t h = log_.chunks.size();
    const bool full_info = learner_.full_information();
    const bool qfid = config_.learner.delay_mode == DelayMode::qfid;

    std::vector<double> weights;
    if (full_info && qfid) {
      weights = qfid_step(queue_, learner_, {},
                          skip_policy(h, config_.learner.warmup, config_.learner.batch,
                                      config_.learner.skip));
    } else {
      weights = learner_.predict();
    }

    std::vector<std::size_t> arms(k_, learner_.choose(rng_));
    if (full_info && config_.learner.within_chunk == WithinChunk::resample) {
      for (std::size_t d = 1; d < k_; ++d) arms[d] = learner_.choose(rng_);
    }
    std::vector<const DrafterSpec*> per_depth;
    per_depth.reserve(k_);
    for (std::size_t a : arms) per_depth.push_back(&setup_.pool[a]);

    const std::size_t onset = generated();
    const std::vector<Token> prefix = history_;
    const VerifiedChunk verified = draft_and_verify(per_depth, prefix);
    ++log_.target_calls;

    history_.insert(history_.end(), verified.appended_tokens.begin(), verified.appended_tokens.end());
    chunk_ends_.push_back(generated());
    for (std::size_t j = 0; j < verified.appended_tokens.size(); ++j) {
      log_.token_arms.push_back(arms[std::min(j, k_ - 1)]);
    }
    log_.chunks.push_back(ChunkRecord{h, onset, arms.front(), verified.accepted_count,
                                      verified.appended_tokens, weights});

    auto records = evaluate_all(setup_.pool, target(), verified.appended_tokens, prefix,
                                config_.mechanism, config_.scenario.branch_factor, onset + 1, h);
    const std::size_t k_h = records.size();
    log_.feedback.insert(log_.feedback.end(), std::make_move_iterator(records.begin()),
                         std::make_move_iterator(records.end()));

    if (!full_info) {
      const double reward = static_cast<double>(k_h) / static_cast<double>(k_ + 1);
      learner_.feed(arms.front(), std::clamp(1.0 - reward, 0.0, 1.0));
    }

    std::vector<TimedLoss> arrivals =
        config_.learner.game == Game::chunk ? chunk_round(h, k_h) : token_rounds(h);
    if (!full_info) return;
    if (qfid) {
      for (auto& loss : arrivals) queue_.push(std::move(loss));
    } else {
      for (const auto& loss : arrivals) {
        learner_.update(loss.loss);
        ++direct_applied_;
      }
    }
  }

  VerifiedChunk draft_and_verify(std::span<const DrafterSpec* const> per_depth,
                                 std::span<const Token> prefix) {
    const bool all_models = std::all_of(per_depth.begin(), per_depth.end(),
                                        [](const DrafterSpec* d) { return d->distribution_based(); });
    if (all_models) {
      if (config_.mechanism == Mechanism::chain) {
        const DraftChunk chunk = draft_chain_mixed(per_depth, prefix, rng_);
        return verify_chain(*setup_.target, prefix, chunk, rng_);
      }
      return speculate_tree_path(*setup_.target, per_depth, prefix,
                                 config_.scenario.branch_factor, rng_);
    }
    // Acceptance at depth k is a Bernoulli(gamma_k) draw; tokens, when a
    // target exists, come from the target itself.
    VerifiedChunk out;
    std::vector<Token> context(prefix.begin(), prefix.end());
    auto emit = [&] {
      const Token x = target() ? sample_token(target()->next(context), rng_) : Token{0};
      out.appended_tokens.push_back(x);
      context.push_back(x);
    };
    for (std::size_t d = 1; d <= per_depth.size(); ++d) {
      const double g = drafter_gamma(*per_depth[d - 1], target(), context, d, config_.mechanism,
                                     config_.scenario.branch_factor);
      out.step_gammas.push_back(g);
      const bool accepted = rng_.uniform() < g;
      emit();
      if (!accepted) return out;
      ++out.accepted_count;
    }
    emit();
    return out;
  }

  std::vector<TimedLoss> chunk_round(std::size_t h, std::size_t k_h) {
    const LossKind kind = resolve_kind(config_.learner.loss_kind, h, config_.learner.hybrid_warmup);
    std::vector<double> loss(n_);
    const std::size_t first = log_.feedback.size() - k_h;
    std::vector<double> gammas(k_h);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < k_h; ++j) gammas[j] = log_.feedback[first + j].gammas[i];
      loss[i] = kind == LossKind::prob ? chunk_prob_loss(gammas) : chunk_length_loss(gammas);
    }
    log_.round_losses.push_back(loss);
    log_.round_arms.push_back(log_.chunks.back().chosen);
    log_.round_token.push_back(generated());

    std::vector<TimedLoss> out;
    if (skip_contributes(h, h, config_.learner.warmup, config_.learner.skip)) {
      out.push_back(TimedLoss{h, std::move(loss), generated()});
    }
    return out;
  }

  // Gamma of drafter i for token t at within-window depth `depth`.
  double window_gamma(std::size_t i, std::size_t t, std::size_t depth) const {
    const DrafterSpec& d = setup_.pool[i];
    if (config_.learner.anchoring == OnsetAnchoring::realized || !depth_sensitive(d)) {
      return log_.feedback[t - 1].gammas[i];
    }
    return drafter_gamma(d, target(), prefix_before(t), depth, config_.mechanism,
                         config_.scenario.branch_factor);
  }

  std::vector<TimedLoss> token_rounds(std::size_t h) {
    std::vector<TimedLoss> out;
    const std::size_t end = generated();
    std::vector<double> window(k_);
    while (next_loss_t_ <= end) {
      const std::size_t t = next_loss_t_;
      const LossKind kind =
          resolve_kind(config_.learner.loss_kind, t - 1, config_.learner.hybrid_warmup);
      const std::size_t needed = kind == LossKind::prob ? t : t + k_;
      if (needed > end) break;

      std::vector<double> loss(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        if (kind == LossKind::prob) {
          loss[i] = prob_loss(window_gamma(i, t, 1));
        } else {
          for (std::size_t k = 1; k <= k_; ++k) window[k - 1] = window_gamma(i, t + k - 1, k);
          loss[i] = length_loss(window, k_);
        }
      }
      log_.round_losses.push_back(loss);
      log_.round_arms.push_back(log_.token_arms[t - 1]);
      log_.round_token.push_back(t);
      if (skip_contributes(t - 1, h, config_.learner.warmup, config_.learner.skip)) {
        out.push_back(TimedLoss{t, std::move(loss), availability_time(t, chunk_ends_, kind, k_)});
      }
      ++next_loss_t_;
    }
    return out;
  }

  const RunConfig& config_;
  const EpisodeSetup& setup_;
  std::size_t n_;
  std::size_t k_;
  Rng rng_;
  Learner learner_;
  DelayQueue queue_;
  std::vector<Token> history_;
  std::vector<std::size_t> chunk_ends_;
  std::size_t next_loss_t_ = 1;
  std::size_t direct_applied_ = 0;
  EpisodeLog log_;
};

}  // namespace

EpisodeLog run_episode(const RunConfig& config, const EpisodeSetup& setup, std::uint64_t seed) {
  if (config.scenario.draft_depth == 0) throw Error("config-invalid", "draft_depth: must be >= 1");
  return Episode(config, setup, seed).run();
}

EpisodeSetup make_specialist_setup(const ScenarioConfig& scenario) {
  SpecialistPool pool = make_specialist_pool(scenario);
  EpisodeSetup setup;
  Token start;
  if (scenario.prompt_domain) {
    start = pool.block_start(*scenario.prompt_domain);
  } else {
    Rng prompt_rng(derive_seed(scenario.seed, 999));
    start = static_cast<Token>(prompt_rng.below(scenario.vocab_size));
  }
  setup.prompt = {start};
  setup.target = std::move(pool.target);
  setup.pool = std::move(pool.drafters);
  return setup;
}

EpisodeLog run_episode(const RunConfig& config) {
  const EpisodeSetup setup = make_specialist_setup(config.scenario);
  return run_episode(config, setup, config.scenario.seed);
}

std::vector<double> cumulative_regret(const EpisodeLog& log) {
  std::vector<double> arm_totals(log.n_arms, 0.0);
  double played = 0.0;
  std::vector<double> series;
  series.reserve(log.round_losses.size());
  for (std::size_t r = 0; r < log.round_losses.size(); ++r) {
    const auto& f = log.round_losses[r];
    played += f[log.round_arms[r]];
    for (std::size_t i = 0; i < log.n_arms; ++i) arm_totals[i] += f[i];
    series.push_back(played - *std::min_element(arm_totals.begin(), arm_totals.end()));
  }
  return series;
}

double mat(const EpisodeLog& log) {
  if (log.target_calls == 0) throw Error("empty-episode", "no chunks generated");
  return static_cast<double>(log.tokens_generated) / static_cast<double>(log.target_calls);
}

MetricSummary summarize(const EpisodeLog& log) {
  MetricSummary s;
  s.mat = mat(log);
  const auto regret = cumulative_regret(log);
  s.rounds = regret.size();
  s.final_regret = regret.empty() ? 0.0 : regret.back();
  s.avg_regret = s.rounds ? s.final_regret / static_cast<double>(s.rounds) : 0.0;
  s.avg_regret_normalized = s.avg_regret / static_cast<double>(log.draft_depth + 1);
  s.per_drafter_share.assign(log.n_arms, 0.0);
  for (std::size_t a : log.token_arms) s.per_drafter_share[a] += 1.0;
  for (double& x : s.per_drafter_share) x /= static_cast<double>(log.token_arms.size());
  s.final_weights = log.chunks.empty() ? std::vector<double>(log.n_arms, 0.0) : log.chunks.back().weights;
  return s;
}

void write_episode_csv(std::ostream& out, const EpisodeLog& log) {
  out << "chunk_id,onset,chosen,accepted,mat_so_far,regret_so_far";
  for (std::size_t i = 0; i < log.n_arms; ++i) out << ",w_" << i;
  out << '\n';
  const auto regret = cumulative_regret(log);
  std::size_t tokens = 0;
  std::size_t r = 0;
  for (const auto& c : log.chunks) {
    tokens += c.appended.size();
    while (r < regret.size() && log.round_token[r] <= tokens) ++r;
    const double regret_so_far = r == 0 ? 0.0 : regret[r - 1];
    out << c.chunk_id << ',' << c.onset << ',' << c.chosen << ',' << c.accepted_count << ','
        << format_number(static_cast<double>(tokens) / static_cast<double>(c.chunk_id + 1)) << ','
        << format_number(regret_so_far);
    for (double w : c.weights) out << ',' << format_number(w);
    out << '\n';
  }
}

std::vector<MetricSummary> run_seeds(const RunConfig& config, const EpisodeSetup& setup,
                                     const std::vector<std::uint64_t>& seeds) {
  std::vector<MetricSummary> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { out[i] = summarize(run_episode(config, setup, seeds[i])); });
  return out;
}

MetricSummary mean_summary(const std::vector<MetricSummary>& runs) {
  MetricSummary m;
  if (runs.empty()) return m;
  const double n = static_cast<double>(runs.size());
  m.per_drafter_share.assign(runs.front().per_drafter_share.size(), 0.0);
  m.final_weights.assign(runs.front().final_weights.size(), 0.0);
  for (const auto& r : runs) {
    m.mat += r.mat / n;
    m.avg_regret += r.avg_regret / n;
    m.avg_regret_normalized += r.avg_regret_normalized / n;
    m.final_regret += r.final_regret / n;
    m.rounds += r.rounds;
    for (std::size_t i = 0; i < m.per_drafter_share.size(); ++i) {
      m.per_drafter_share[i] += r.per_drafter_share[i] / n;
      m.final_weights[i] += r.final_weights[i] / n;
    }
  }
  m.rounds /= runs.size();
  return m;
}

namespace {

// Share of chunks in the last quarter of the episode per arm.
std::vector<double> late_chunk_share(const EpisodeLog& log) {
  std::vector<double> share(log.n_arms, 0.0);
  const std::size_t from = log.chunks.size() - log.chunks.size() / 4;
  for (std::size_t h = from; h < log.chunks.size(); ++h) share[log.chunks[h].chosen] += 1.0;
  const double total = static_cast<double>(log.chunks.size() - from);
  for (double& s : share) s /= total;
  return share;
}

}  // namespace

CensoringReport run_censoring_study(const CensoringConfig& config) {
  const std::size_t k = config.draft_depth;
  EpisodeSetup setup;
  setup.pool.push_back(DrafterSpec{0, AcceptanceProcess(config.drafter1), "drafter-1"});
  setup.pool.push_back(DrafterSpec{1, AcceptanceProcess(config.drafter2), "drafter-2"});

  auto arm_lengths = [&](const AcceptanceProcess& p) {
    std::vector<double> full(k);
    for (std::size_t d = 1; d <= k; ++d) full[d - 1] = p.at(d);
    const std::vector<double> first_two = {p.at(1), p.at(2)};
    return CensoringArm{accept_length_estimate(full, k), accept_length_estimate(first_two, 2)};
  };

  CensoringReport report;
  report.drafter1 = arm_lengths(setup.pool[0].process());
  report.drafter2 = arm_lengths(setup.pool[1].process());

  RunConfig base;
  base.scenario.vocab_size = 2;
  base.scenario.n_drafters = 2;
  base.scenario.draft_depth = k;
  base.scenario.episode_tokens = config.episode_tokens;
  base.learner.learner = config.learner;
  base.learner.loss_kind = LossKind::length;
  base.learner.anchoring = config.anchoring;

  RunConfig chunk_level = base;
  chunk_level.learner.game = Game::chunk;
  chunk_level.learner.delay_mode = DelayMode::none;
  RunConfig token_level = base;
  token_level.learner.game = Game::token;
  token_level.learner.delay_mode = DelayMode::qfid;

  const std::size_t seeds = config.n_seeds;
  std::vector<std::vector<double>> chunk_shares(seeds);
  std::vector<std::vector<double>> token_shares(seeds);
  parallel_for(seeds, [&](std::size_t s) {
    const std::uint64_t seed = derive_seed(config.seed, s);
    chunk_shares[s] = late_chunk_share(run_episode(chunk_level, setup, seed));
    token_shares[s] = late_chunk_share(run_episode(token_level, setup, seed));
  });

  report.chunk_level_share.assign(2, 0.0);
  report.token_level_share.assign(2, 0.0);
  for (std::size_t s = 0; s < seeds; ++s) {
    for (std::size_t a = 0; a < 2; ++a) {
      report.chunk_level_share[a] += chunk_shares[s][a] / static_cast<double>(seeds);
      report.token_level_share[a] += token_shares[s][a] / static_cast<double>(seeds);
    }
    report.chunk_level_majority.push_back(chunk_shares[s][1] > chunk_shares[s][0] ? 1 : 0);
    report.token_level_majority.push_back(token_shares[s][1] > token_shares[s][0] ? 1 : 0);
  }
  return report;
}

std::vector<ScalingRow> run_pool_scaling_sweep(const RunConfig& base,
                                               const std::vector<std::size_t>& pool_sizes,
                                               const std::vector<LearnerKind>& learners,
                                               const std::vector<std::uint64_t>& seeds) {
  if (pool_sizes.empty()) return {};
  if (!std::is_sorted(pool_sizes.begin(), pool_sizes.end()) || pool_sizes.front() == 0) {
    throw Error("config-invalid", "pool_sizes: must be ascending and positive");
  }
  ScenarioConfig scenario = base.scenario;
  scenario.n_drafters = pool_sizes.back();
  scenario.prompt_domain = 0;
  const EpisodeSetup full = make_specialist_setup(scenario);

  std::vector<ScalingRow> rows;
  for (std::size_t n : pool_sizes) {
    EpisodeSetup setup = full;
    setup.pool.resize(n);
    for (LearnerKind kind : learners) {
      RunConfig config = base;
      config.scenario = scenario;
      config.scenario.n_drafters = n;
      config.learner.learner = kind;
      rows.push_back(ScalingRow{n, kind, mean_summary(run_seeds(config, setup, seeds))});
    }
  }
  return rows;
}

}  // namespace draftsel
