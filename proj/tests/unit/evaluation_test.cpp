// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "draftsel/evaluation.hpp"
#include "support.hpp"

namespace draftsel {
namespace {

using testing::error_code_of;
using testing::model_drafter;

TEST(AcceptLengthEstimate, Examples) {
  const std::vector<double> censored = {0.6, 0.6};
  EXPECT_NEAR(accept_length_estimate(censored, 2), 1.96, 1e-12);
  for (std::size_t k : {1u, 3u, 8u}) {
    const std::vector<double> ones(k, 1.0);
    EXPECT_DOUBLE_EQ(accept_length_estimate(ones, k), static_cast<double>(k + 1));
    std::vector<double> first_zero(k, 0.7);
    first_zero[0] = 0.0;
    EXPECT_DOUBLE_EQ(accept_length_estimate(first_zero, k), 1.0);
  }
}

TEST(AcceptLengthEstimate, Errors) {
  const std::vector<double> two = {0.5, 0.5};
  EXPECT_EQ(error_code_of([&] { accept_length_estimate(two, 3); }), "window-incomplete");
  const std::vector<double> bad = {0.5, 1.5};
  EXPECT_EQ(error_code_of([&] { accept_length_estimate(bad, 2); }), "invalid-gamma");
}

TEST(AcceptLengthEstimate, RangeAndMonotonicity) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t k = 1 + rep % 9;
    std::vector<double> g(k);
    for (double& x : g) x = u(gen);
    const double base = accept_length_estimate(g, k);
    EXPECT_GE(base, 1.0);
    EXPECT_LE(base, static_cast<double>(k + 1));
    const std::size_t j = rep % k;
    g[j] = g[j] + (1.0 - g[j]) * u(gen);
    EXPECT_GE(accept_length_estimate(g, k), base - 1e-12);
  }
}

TEST(LengthLoss, Examples) {
  const std::vector<double> ones(4, 1.0);
  EXPECT_DOUBLE_EQ(length_loss(ones, 4), 0.0);
  const std::vector<double> zero = {0.0};
  EXPECT_DOUBLE_EQ(length_loss(zero, 1), 0.5);
  const std::vector<double> half = {0.5};
  EXPECT_DOUBLE_EQ(length_loss(half, 1), 0.25);
  const std::vector<double> short_window = {0.5};
  EXPECT_EQ(error_code_of([&] { length_loss(short_window, 2); }), "window-incomplete");
}

TEST(ProbLoss, Examples) {
  EXPECT_DOUBLE_EQ(prob_loss(1.0), 0.0);
  EXPECT_DOUBLE_EQ(prob_loss(0.0), 1.0);
  EXPECT_NEAR(prob_loss(0.7), 0.3, 1e-15);
}

TEST(ChunkLosses, Examples) {
  const std::vector<double> ones = {1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(chunk_prob_loss(ones), 0.0);
  EXPECT_DOUBLE_EQ(chunk_length_loss(ones), 0.0);
  const std::vector<double> halves = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(chunk_prob_loss(halves), 0.5);
  const std::vector<double> split = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(chunk_prob_loss(split), 0.5);
  const std::vector<double> censored = {0.6, 0.6};
  EXPECT_NEAR(chunk_length_loss(censored), 1.0 - 1.96 / 3.0, 1e-12);
  const std::vector<double> zero = {0.0};
  EXPECT_DOUBLE_EQ(chunk_length_loss(zero), 0.5);
  EXPECT_EQ(error_code_of([] { chunk_prob_loss(std::vector<double>{}); }), "empty-chunk");
  EXPECT_EQ(error_code_of([] { chunk_length_loss(std::vector<double>{}); }), "empty-chunk");
}

TEST(LossRange, AllLossesInUnitInterval) {
  std::mt19937_64 gen(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t k = 1 + rep % 6;
    std::vector<double> g(k);
    for (double& x : g) x = u(gen);
    for (double loss : {length_loss(g, k), chunk_prob_loss(g), chunk_length_loss(g), prob_loss(g[0])}) {
      EXPECT_GE(loss, 0.0);
      EXPECT_LE(loss, 1.0);
    }
  }
}

TEST(AvailabilityTime, Examples) {
  const std::vector<std::size_t> ends = {5, 10, 15};
  EXPECT_EQ(availability_time(5, ends, LossKind::prob, 5), 5u);
  EXPECT_EQ(availability_time(3, ends, LossKind::prob, 5), 5u);
  EXPECT_EQ(availability_time(1, ends, LossKind::length, 5), 10u);
  EXPECT_EQ(error_code_of([&] { availability_time(11, ends, LossKind::length, 5); }), "pending");
  EXPECT_EQ(error_code_of([&] { availability_time(1, ends, LossKind::hybrid, 5); }), "invalid-kind");
}

TEST(AvailabilityTime, DelayAtMostTwoK) {
  std::mt19937_64 gen(23);
  for (std::size_t k : {1u, 3u, 8u}) {
    std::vector<std::size_t> ends;
    std::size_t t = 0;
    while (t < 500) ends.push_back(t += 1 + gen() % (k + 1));
    for (std::size_t s = 1; s + k <= ends.back(); ++s) {
      EXPECT_LE(availability_time(s, ends, LossKind::length, k) - s, 2 * k);
      EXPECT_LE(availability_time(s, ends, LossKind::prob, k) - s, k);
    }
  }
}

TEST(HybridSchedule, Examples) {
  EXPECT_EQ(hybrid_loss_schedule(0, 0), LossKind::length);
  EXPECT_EQ(hybrid_loss_schedule(1000000, kForever), LossKind::prob);
  EXPECT_EQ(hybrid_loss_schedule(5, 6), LossKind::prob);
  EXPECT_EQ(hybrid_loss_schedule(6, 6), LossKind::length);
}

ConditionalModel constant(std::vector<double> row) {
  return ConditionalModel::context_free(Distribution(std::move(row)));
}

TEST(EvaluateAll, SelfEvaluationIsOne) {
  std::mt19937_64 gen(24);
  const auto p = testing::random_bigram(gen, 4);
  const std::vector<DrafterSpec> pool = {model_drafter(0, p)};
  const std::vector<Token> prefix = {1};
  const std::vector<Token> appended = {2, 0, 3, 3};
  const auto records = evaluate_all(pool, &p, appended, prefix, Mechanism::chain, 1, 7, 3);
  ASSERT_EQ(records.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(records[j].gammas[0], 1.0, 1e-12);
    EXPECT_EQ(records[j].t, 7 + j);
    EXPECT_EQ(records[j].depth, j + 1);
    EXPECT_EQ(records[j].chunk_id, 3u);
    EXPECT_EQ(records[j].is_chunk_end, j == 3);
  }
}

TEST(EvaluateAll, ClosedFormRows) {
  const auto p = constant({0.5, 0.5});
  const std::vector<DrafterSpec> pool = {model_drafter(0, constant({0.8, 0.2})),
                                         model_drafter(1, constant({0.1, 0.9}))};
  const std::vector<Token> appended = {0, 1};
  const auto records = evaluate_all(pool, &p, appended, {}, Mechanism::chain, 1);
  for (const auto& r : records) {
    EXPECT_NEAR(r.gammas[0], 0.7, 1e-15);
    EXPECT_NEAR(r.gammas[1], 0.6, 1e-15);
  }
}

TEST(EvaluateAll, ProcessDrafterUsesDepth) {
  const std::vector<DrafterSpec> pool = {testing::process_drafter(0, {0.6, 0.6, 0.9})};
  const std::vector<Token> appended = {0, 0, 0, 0};
  const auto records = evaluate_all(pool, nullptr, appended, {}, Mechanism::chain, 1);
  EXPECT_DOUBLE_EQ(records[0].gammas[0], 0.6);
  EXPECT_DOUBLE_EQ(records[1].gammas[0], 0.6);
  EXPECT_DOUBLE_EQ(records[3].gammas[0], 0.9);
}

TEST(EvaluateAll, NeedsTargetForModels) {
  const std::vector<DrafterSpec> pool = {model_drafter(0, constant({0.5, 0.5}))};
  const std::vector<Token> appended = {0};
  EXPECT_EQ(error_code_of([&] { evaluate_all(pool, nullptr, appended, {}, Mechanism::chain, 1); }),
            "mechanism-unsupported");
}

TEST(EvaluateAll, CounterfactualIndependence) {
  std::mt19937_64 gen(25);
  const auto p = testing::random_bigram(gen, 4);
  const auto a = model_drafter(0, testing::random_bigram(gen, 4));
  const auto b = model_drafter(1, testing::random_bigram(gen, 4));
  const std::vector<Token> prefix = {0};
  const std::vector<Token> appended = {3, 1, 2};
  const std::vector<DrafterSpec> both = {a, b};
  const std::vector<DrafterSpec> only_b = {b};
  const auto r2 = evaluate_all(both, &p, appended, prefix, Mechanism::tree, 2);
  const auto r1 = evaluate_all(only_b, &p, appended, prefix, Mechanism::tree, 2);
  for (std::size_t j = 0; j < appended.size(); ++j) EXPECT_EQ(r2[j].gammas[1], r1[j].gammas[0]);
}

TEST(FeedbackCsv, Schema) {
  std::vector<FeedbackRecord> records(2);
  records[0] = {1, {0.5, 1.0}, 0, 1, false};
  records[1] = {2, {0.25, 0.0}, 0, 2, true};
  std::ostringstream out;
  write_feedback_csv(out, records, 2);
  EXPECT_EQ(out.str(), "t,chunk_id,gamma_0,gamma_1\n1,0,0.5,1\n2,0,0.25,0\n");
}

}  // namespace
}  // namespace draftsel
