#include "plada/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plada/logit_io.hpp"
#include "plada/scoring.hpp"

namespace plada::selection {

namespace {

// Row order by score with stable index tie-break.
std::vector<std::uint64_t> order_by_score(std::span<const double> scores,
                                          Direction direction) {
  std::vector<std::uint64_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  if (direction == Direction::LowestFirst) {
    std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
      if (scores[a] != scores[b]) return scores[a] < scores[b];
      return a < b;
    });
  } else {
    std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
  }
  return order;
}

}  // namespace

SelectionResult select_top_fraction(const ScoreVector& s, double p,
                                    Direction direction) {
  const std::uint64_t n = s.scores.size();
  if (n == 0) throw DegenerateLength("select_top_fraction needs n >= 1");
  const std::uint64_t total = kept_count(n, p);

  auto order = order_by_score(s.scores, direction);
  SelectionResult res;
  res.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(total));
  std::sort(res.kept.begin(), res.kept.end());
  res.n_ref = n;
  res.method = direction == Direction::LowestFirst ? SelectionMethod::TopFraction
                                                   : SelectionMethod::Inverse;
  res.keep_ratio = p;
  return res;
}

SelectionResult select_consensus(std::span<const RankVector> ranks, double p) {
  ScoreVector cost = scoring::consensus_cost(ranks);
  SelectionResult res = select_top_fraction(cost, p, Direction::LowestFirst);
  res.method = SelectionMethod::Consensus;
  return res;
}

QuotaPlan plan_quotas(std::span<const std::uint64_t> class_counts,
                      std::uint64_t budget, double alpha) {
  const std::size_t k = class_counts.size();
  QuotaPlan plan;
  plan.alpha = alpha;
  plan.quotas.assign(k, 0);

  std::uint64_t nonempty = 0;
  for (auto c : class_counts) nonempty += (c > 0) ? 1 : 0;

  std::uint64_t remaining = budget;
  if (budget >= nonempty) {
    for (std::size_t c = 0; c < k; ++c)
      if (class_counts[c] > 0) plan.quotas[c] = 1;
    remaining -= nonempty;
  }

  std::vector<double> weight(k, 0.0);
  double total_weight = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (class_counts[c] > 0)
      weight[c] = std::pow(static_cast<double>(class_counts[c]), alpha);
    total_weight += weight[c];
  }

  if (remaining > 0 && total_weight > 0.0) {
    std::vector<double> frac(k, 0.0);
    std::uint64_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double share =
          static_cast<double>(remaining) * weight[c] / total_weight;
      const double base = std::floor(share);
      plan.quotas[c] += static_cast<std::uint64_t>(base);
      assigned += static_cast<std::uint64_t>(base);
      frac[c] = share - base;
    }
    // Distribute the residue by descending remainder, lower class id first.
    std::vector<std::size_t> by_frac;
    for (std::size_t c = 0; c < k; ++c)
      if (weight[c] > 0.0) by_frac.push_back(c);
    std::sort(by_frac.begin(), by_frac.end(), [&](std::size_t a, std::size_t b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return a < b;
    });
    std::uint64_t residue = remaining > assigned ? remaining - assigned : 0;
    for (std::size_t i = 0; i < by_frac.size() && residue > 0; ++i, --residue)
      ++plan.quotas[by_frac[i]];
  }

  // Cap at availability; everything not allocated (capping surplus or an
  // unallocatable budget) returns to the global pool.
  for (std::size_t c = 0; c < k; ++c)
    plan.quotas[c] = std::min(plan.quotas[c], class_counts[c]);
  std::uint64_t allocated = 0;
  for (auto q : plan.quotas) allocated += q;
  plan.leftover_to_global = budget >= allocated ? budget - allocated : 0;
  return plan;
}

SelectionResult select_safety_net(const ScoreVector& s,
                                  std::span<const std::uint32_t> hard, double p,
                                  double reserve_fraction, double alpha,
                                  Direction direction, std::uint32_t k) {
  const std::uint64_t n = s.scores.size();
  if (n == 0) throw DegenerateLength("select_safety_net needs n >= 1");
  if (hard.size() != n)
    throw ShapeMismatch("labels length " + std::to_string(hard.size()) +
                        " != scores length " + std::to_string(n));
  if (!(reserve_fraction >= 0.0 && reserve_fraction <= 1.0))
    throw InvalidKeepRatio("reserve fraction must be in [0,1], got " +
                           std::to_string(reserve_fraction));
  if (k == 0) {
    for (auto l : hard) k = std::max(k, l + 1);
  }

  const std::uint64_t total = kept_count(n, p);
  const auto counts = core::class_histogram(hard, k);
  const auto reserve_budget = static_cast<std::uint64_t>(
      std::floor(static_cast<double>(total) * reserve_fraction));
  QuotaPlan plan = plan_quotas(counts, reserve_budget, alpha);
  plan.reserve_fraction = reserve_fraction;

  auto order = order_by_score(s.scores, direction);

  // Phase 1: per-class quotas, best rows first.
  std::vector<char> taken(n, 0);
  std::vector<std::uint64_t> filled(k, 0);
  std::uint64_t reserved_taken = 0;
  for (std::uint64_t row : order) {
    const std::uint32_t c = hard[row];
    if (filled[c] < plan.quotas[c]) {
      taken[row] = 1;
      ++filled[c];
      ++reserved_taken;
    }
  }

  // Phase 2: remaining budget by global score over untaken rows.
  std::uint64_t global_budget = total - reserved_taken;
  SelectionResult res;
  res.kept.reserve(total);
  for (std::uint64_t i = 0; i < n && global_budget > 0; ++i) {
    const std::uint64_t row = order[i];
    if (!taken[row]) {
      taken[row] = 1;
      --global_budget;
    }
  }
  for (std::uint64_t row = 0; row < n; ++row)
    if (taken[row]) res.kept.push_back(row);

  res.n_ref = n;
  res.method = SelectionMethod::SafetyNet;
  res.keep_ratio = p;
  res.quota_plan = std::move(plan);
  return res;
}

}  // namespace plada::selection
