// Turning scores into kept-index sets: top-fraction, inverse, consensus and
// safety-net strategies. Every strategy keeps exactly floor(n*p) rows
// (minimum 1) and returns indices sorted ascending; score ties break by the
// lower row index, so identical inputs always give identical results.
#pragma once

#include <span>

#include "plada/types.hpp"

namespace plada::selection {

SelectionResult select_top_fraction(const ScoreVector& s, double p,
                                    Direction direction);

// Keeps the rows with the smallest consensus cost (elementwise max rank).
SelectionResult select_consensus(std::span<const RankVector> ranks, double p);

// Apportions `budget` slots over classes by weight N_c^alpha:
//   1. every class with N_c > 0 gets a floor of 1 when budget allows;
//   2. the rest goes by largest-remainder apportionment (ties to lower id);
//   3. quotas are capped at N_c, the capped surplus moves to
//      leftover_to_global.
QuotaPlan plan_quotas(std::span<const std::uint64_t> class_counts,
                      std::uint64_t budget, double alpha);

// Two-phase selection: per-class quotas (reserve_fraction of the budget,
// planned over the pseudo-label class counts) are filled with each class's
// best rows first, then the remaining budget is filled globally by score.
// `k` bounds the label alphabet; 0 means infer max(hard)+1.
SelectionResult select_safety_net(const ScoreVector& s,
                                  std::span<const std::uint32_t> hard, double p,
                                  double reserve_fraction, double alpha,
                                  Direction direction, std::uint32_t k = 0);

}  // namespace plada::selection
