// Transmissible label artifacts: hard labels, per-class soft prototypes,
// Dirichlet concentrations and importance weights.
#pragma once

#include <span>

#include "plada/types.hpp"

namespace plada::labeling {

// What to do when a class has no assigned rows. Error keeps payload and
// student class counts in sync; Uniform substitutes a flat prototype
// (respectively an all-ones concentration vector).
enum class EmptyClassPolicy { Error, Uniform };

// argmax per row; ties resolve to the lowest class index.
std::vector<std::uint32_t> hard_labels(const LogitMatrix& m,
                                       Exec exec = Exec::Parallel);

// softmax(row / T) for every row.
Matrix softmax_rows(const LogitMatrix& m, double temperature = 1.0,
                    Exec exec = Exec::Parallel);

// Row c = mean of softmax rows assigned to class c. k x k, row-stochastic.
Matrix average_soft_labels(const LogitMatrix& m,
                           std::span<const std::uint32_t> hard,
                           double temperature = 1.0,
                           EmptyClassPolicy policy = EmptyClassPolicy::Error,
                           Exec exec = Exec::Parallel);

// Method-of-moments Dirichlet concentrations per class. The precision
// s = mu_c(1-mu_c)/var_c - 1 uses the population variance of the class-own
// probability; var is clamped below by 1e-12 and s is clipped to
// [0.1, 1e6]. alpha_c = mu * s.
Matrix dirichlet_mom(const LogitMatrix& m, std::span<const std::uint32_t> hard,
                     double temperature = 1.0,
                     EmptyClassPolicy policy = EmptyClassPolicy::Error,
                     Exec exec = Exec::Parallel);

// Boltzmann weights exp(-s_i/T_weight) normalized to unit mean. The minimum
// score is subtracted before exponentiation, so any common shift cancels.
std::vector<double> importance_weights(const ScoreVector& s,
                                       double weight_temperature);

// Checks the LabelSet invariants: labels < k, prototype rows sum to 1 within
// 1e-9, concentrations strictly positive, weights positive with mean 1
// within 1e-9. Throws the matching error type.
void validate_label_set(const LabelSet& set, std::uint32_t k);

}  // namespace plada::labeling
