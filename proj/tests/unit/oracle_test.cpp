// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "draftsel/oracle.hpp"
#include "draftsel/specdec.hpp"
#include "support.hpp"

namespace draftsel {
namespace {

using testing::error_code_of;
using testing::model_drafter;

ConditionalModel constant(std::vector<double> row) {
  return ConditionalModel::context_free(Distribution(std::move(row)));
}

TEST(BruteExpectedLength, TargetAsDrafterGivesKPlusOne) {
  std::mt19937_64 gen(51);
  const auto p = testing::random_bigram(gen, 3);
  const std::vector<Token> prefix = {1};
  for (std::size_t k : {1u, 3u, 5u}) {
    EXPECT_NEAR(brute_expected_accept_length(&p, model_drafter(0, p), prefix, k, Mechanism::chain, 1),
                static_cast<double>(k + 1), 1e-12);
  }
}

TEST(BruteExpectedLength, ProcessDrafters) {
  EXPECT_DOUBLE_EQ(brute_expected_accept_length(nullptr, testing::process_drafter(0, {1.0, 0.0}), {},
                                                8, Mechanism::chain, 1),
                   2.0);
  // 1 + 0.6 + 0.36 + 0.36 * 0.9 + ... over K = 8 depths.
  double expected = 1.0, survive = 1.0;
  const std::vector<double> g = {0.6, 0.6, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9};
  for (double x : g) expected += survive *= x;
  EXPECT_NEAR(brute_expected_accept_length(nullptr, testing::process_drafter(1, {0.6, 0.6, 0.9}), {},
                                           8, Mechanism::chain, 1),
              expected, 1e-12);
}

TEST(BruteExpectedLength, SingleStepClosedForm) {
  const auto p = constant({0.5, 0.5});
  const auto d = model_drafter(0, constant({0.8, 0.2}));
  EXPECT_NEAR(brute_expected_accept_length(&p, d, {}, 1, Mechanism::chain, 1), 1.7, 1e-12);
  EXPECT_NEAR(brute_expected_accept_length(&p, d, {}, 1, Mechanism::tree, 1), 1.5, 1e-12);
}

TEST(BruteExpectedLength, AgreesWithMonteCarlo) {
  std::mt19937_64 gen(52);
  const auto p = testing::random_bigram(gen, 3);
  const auto d = model_drafter(0, testing::random_bigram(gen, 3));
  const std::vector<Token> prefix = {2};
  const std::size_t k = 3;
  for (auto mech : {Mechanism::chain, Mechanism::tree}) {
    const double exact = brute_expected_accept_length(&p, d, prefix, k, mech, 2);
    Rng rng(53);
    const int n = 100000;
    double sum = 0.0, sum_sq = 0.0;
    const std::vector<const DrafterSpec*> per_depth(k, &d);
    for (int i = 0; i < n; ++i) {
      const VerifiedChunk v = mech == Mechanism::chain
                                  ? verify_chain(p, prefix, draft_chain(d, prefix, k, rng), rng)
                                  : speculate_tree_path(p, per_depth, prefix, 2, rng);
      const double len = static_cast<double>(v.appended_tokens.size());
      sum += len;
      sum_sq += len * len;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sum_sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, exact, 3 * sd);
  }
}

TEST(BruteExpectedLength, BudgetExceeded) {
  const auto p = ConditionalModel::context_free(Distribution::uniform(10));
  const auto d = model_drafter(0, p);
  EXPECT_EQ(error_code_of([&] { brute_expected_accept_length(&p, d, {}, 7, Mechanism::chain, 1); }),
            "budget-exceeded");
  EXPECT_EQ(error_code_of([&] {
              brute_expected_accept_length(&p, d, {}, 3, Mechanism::chain, 1, EnumerationBudget{999});
            }),
            "budget-exceeded");
  EXPECT_NO_THROW(brute_expected_accept_length(&p, d, {}, 3, Mechanism::chain, 1, EnumerationBudget{1000}));
}

// The estimator's expectation equals the true expected length when the
// acceptance probabilities do not depend on the realized tokens.
TEST(EstimatorExpectation, MatchesTruthForContextFreeModels) {
  std::mt19937_64 gen(54);
  for (int rep = 0; rep < 30; ++rep) {
    const auto p = ConditionalModel::context_free(testing::random_row(gen, 3));
    const auto q = ConditionalModel::context_free(testing::random_row(gen, 3));
    const auto d = model_drafter(0, q);
    for (auto mech : {Mechanism::chain, Mechanism::tree}) {
      for (std::size_t k : {1u, 2u, 3u}) {
        EXPECT_NEAR(exact_estimator_expectation(&p, d, {}, k, mech, 2),
                    brute_expected_accept_length(&p, d, {}, k, mech, 2), 1e-9);
      }
    }
  }
}

TEST(EstimatorExpectation, MatchesTruthForDepthVariants) {
  std::mt19937_64 gen(55);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = ConditionalModel::context_free(testing::random_row(gen, 3));
    std::vector<ContextTable> variants;
    for (int depth = 0; depth < 3; ++depth) variants.push_back({testing::random_row(gen, 3)});
    const auto q = ConditionalModel::context_free(testing::random_row(gen, 3)).with_depth_variants(variants);
    const auto d = model_drafter(0, q);
    EXPECT_NEAR(exact_estimator_expectation(&p, d, {}, 3, Mechanism::chain, 1),
                brute_expected_accept_length(&p, d, {}, 3, Mechanism::chain, 1), 1e-9);
  }
}

TEST(EstimatorExpectation, MatchesTruthForProcesses) {
  const auto d = testing::process_drafter(0, {0.6, 0.6, 0.9});
  for (std::size_t k : {1u, 2u, 5u}) {
    EXPECT_NEAR(exact_estimator_expectation(nullptr, d, {}, k, Mechanism::chain, 1),
                brute_expected_accept_length(nullptr, d, {}, k, Mechanism::chain, 1), 1e-12);
  }
  EXPECT_NEAR(exact_estimator_expectation(nullptr, d, {}, 2, Mechanism::chain, 1), 1.96, 1e-12);
}

// Once acceptance depends on the realized context, the accepted path is
// the drafter-favoured one, while the estimator averages gammas over plain
// target rollouts.
TEST(EstimatorExpectation, DiffersWhenAcceptanceDependsOnContext) {
  const auto p = ConditionalModel::bigram({Distribution({0.5, 0.5}), Distribution({0.0, 1.0})});
  const auto q = ConditionalModel::bigram({Distribution({0.9, 0.1}), Distribution({0.1, 0.9})});
  const auto d = model_drafter(0, q);
  const std::vector<Token> prefix = {0};
  // Accept token 0 w.p. 1/2, then again w.p. 1/2: 1 + 1/2 + 1/4.
  EXPECT_NEAR(brute_expected_accept_length(&p, d, prefix, 2, Mechanism::tree, 1), 1.75, 1e-12);
  // gamma_1 = 1/2; gamma_2 is 1/2 after token 0 and 1 after token 1.
  EXPECT_NEAR(exact_estimator_expectation(&p, d, prefix, 2, Mechanism::tree, 1), 1.875, 1e-12);
}

TEST(TargetSequenceDistribution, SumsToOne) {
  std::mt19937_64 gen(56);
  const auto p = testing::random_bigram(gen, 3);
  const std::vector<Token> prefix = {0};
  const auto dist = target_sequence_distribution(p, prefix, 3);
  EXPECT_EQ(dist.size(), 27u);
  double total = 0.0;
  for (const auto& [seq, pr] : dist) total += pr;
  EXPECT_NEAR(total, 1.0, 1e-12);
  const auto& row0 = p.next(prefix);
  const std::vector<Token> two = {2};
  EXPECT_NEAR(dist.at({2, 1, 0}), row0[2] * p.next(two)[1] * p.next(std::vector<Token>{1})[0], 1e-15);
}

TEST(OutputDistribution, LosslessForEveryPolicy) {
  std::mt19937_64 gen(57);
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = testing::random_bigram(gen, 3);
    std::vector<DrafterSpec> pool;
    for (std::size_t i = 0; i < 3; ++i) pool.push_back(model_drafter(i, testing::random_bigram(gen, 3)));
    const std::vector<Token> prefix = {1};
    for (std::size_t length : {1u, 2u, 3u}) {
      const auto direct = target_sequence_distribution(p, prefix, length);
      for (auto mech : {Mechanism::chain, Mechanism::tree}) {
        for (std::size_t k : {1u, 2u}) {
          const std::vector<SelectionPolicy> policies = {
              fixed_policy(0, 3), fixed_policy(2, 3), round_robin_policy(3),
              hedge_policy(p, pool, prefix, 2.0)};
          for (const auto& policy : policies) {
            const auto spec = brute_output_distribution(p, pool, policy, prefix, length, k, mech, 2);
            EXPECT_LE(distribution_tv(spec, direct), 1e-9);
          }
        }
      }
    }
  }
}

TEST(OutputDistribution, PoolOfTargetItself) {
  std::mt19937_64 gen(58);
  const auto p = testing::random_bigram(gen, 2);
  const std::vector<DrafterSpec> pool = {model_drafter(0, p)};
  const std::vector<Token> prefix = {0};
  const auto spec = brute_output_distribution(p, pool, fixed_policy(0, 1), prefix, 4, 3, Mechanism::chain, 1);
  EXPECT_LE(distribution_tv(spec, target_sequence_distribution(p, prefix, 4)), 1e-12);
}

TEST(OutputDistribution, DetectsABrokenVerifier) {
  // Sanity check of the checker: skipping the residual step changes the law.
  const auto p = constant({0.5, 0.5});
  const SequenceDistribution wrong = {{{0}, 0.8}, {{1}, 0.2}};
  EXPECT_NEAR(distribution_tv(wrong, target_sequence_distribution(p, {}, 1)), 0.3, 1e-15);
}

TEST(OutputDistribution, RejectsProcessDrafters) {
  const auto p = constant({0.5, 0.5});
  const std::vector<DrafterSpec> pool = {testing::process_drafter(0, {0.5})};
  EXPECT_EQ(error_code_of([&] {
              brute_output_distribution(p, pool, fixed_policy(0, 1), {}, 2, 1, Mechanism::chain, 1);
            }),
            "mechanism-unsupported");
}

TEST(ExactHedgeRegret, Examples) {
  const std::vector<std::vector<double>> single = {{0.3}, {0.9}, {0.1}};
  EXPECT_NEAR(exact_hedge_regret(single, 0.5), 0.0, 1e-15);
  const std::vector<std::vector<double>> zeros(50, std::vector<double>(4, 0.0));
  EXPECT_DOUBLE_EQ(exact_hedge_regret(zeros, 0.5), 0.0);
  for (std::size_t n : {2u, 5u}) {
    const std::size_t t_len = 1000;
    std::vector<std::vector<double>> constant_columns(t_len, std::vector<double>(n));
    for (auto& row : constant_columns) {
      for (std::size_t i = 0; i < n; ++i) row[i] = 0.1 + 0.8 * static_cast<double>(i) / n;
    }
    const double eta = std::sqrt(8 * std::log(static_cast<double>(n)) / t_len);
    EXPECT_LE(exact_hedge_regret(constant_columns, eta), 2 * std::sqrt(t_len * std::log(static_cast<double>(n))));
  }
}

}  // namespace
}  // namespace draftsel
