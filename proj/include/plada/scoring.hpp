// Per-row uncertainty scores and score-space transforms.
//
// energy(x;T)  = -T * log sum_j exp(x_j / T)      (lower = more confident)
// entropy(x;T) = Shannon entropy of softmax(x/T)  (higher = more uncertain)
//
// Both kernels subtract the row maximum before exponentiating, so logits up
// to ~|700| are safe. Parallel execution scores rows independently and is
// bit-identical to the serial reference.
#pragma once

#include <span>

#include "plada/types.hpp"

namespace plada::scoring {

ScoreVector energy(const LogitMatrix& m, double temperature = 1.0,
                   Exec exec = Exec::Parallel);

ScoreVector entropy(const LogitMatrix& m, double temperature = 1.0,
                    Exec exec = Exec::Parallel);

// r_i = rank(s_i)/(n-1), rank being the 0-based position in the ascending
// sort. Ties break by original index (stable). Requires n >= 2.
RankVector rank_normalize(const ScoreVector& s);

// Elementwise maximum over the rank vectors: c_i = max_k r_i^(k).
ScoreVector consensus_cost(std::span<const RankVector> ranks);

}  // namespace plada::scoring
