// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "draftsel/error.hpp"
#include "draftsel/vocab.hpp"

namespace draftsel::testing {

template <class Fn>
std::string error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// Dirichlet(1,...,1) row from an independent generator.
inline Distribution random_row(std::mt19937_64& gen, std::size_t v) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> row(v);
  double total = 0.0;
  for (double& x : row) total += x = e(gen);
  for (double& x : row) x /= total;
  return Distribution(row);
}

inline ConditionalModel random_bigram(std::mt19937_64& gen, std::size_t v) {
  ContextTable rows;
  for (std::size_t c = 0; c < v; ++c) rows.push_back(random_row(gen, v));
  return ConditionalModel::bigram(rows);
}

inline DrafterSpec model_drafter(std::size_t id, ConditionalModel m) {
  return DrafterSpec{id, std::move(m), "d" + std::to_string(id)};
}

inline DrafterSpec process_drafter(std::size_t id, std::vector<double> gammas) {
  return DrafterSpec{id, AcceptanceProcess(std::move(gammas)), "p" + std::to_string(id)};
}

}  // namespace draftsel::testing
