#include "plada/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plada::scoring {

namespace {

double row_energy(std::span<const double> row, double T) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : row) sum += std::exp((v - mx) / T);
  return -mx - T * std::log(sum);
}

double row_entropy(std::span<const double> row, double T) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  // p_j = exp(g_j - g_max) / Z with g = x/T; H = log Z - E[g - g_max]
  double z = 0.0, acc = 0.0;
  for (double v : row) {
    const double g = (v - mx) / T;
    const double e = std::exp(g);
    z += e;
    acc += e * g;
  }
  return std::log(z) - acc / z;
}

template <typename Fn>
ScoreVector score_rows(const LogitMatrix& m, double T, Exec exec, Metric metric,
                       Fn&& fn) {
  if (!(T > 0.0)) throw Error("temperature must be positive, got " + std::to_string(T));
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.rows());
  ScoreVector out;
  out.metric = metric;
  out.temperature = T;
  out.scores.resize(m.rows());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out.scores[i] = fn(m.row(static_cast<std::size_t>(i)), T);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out.scores[i] = fn(m.row(static_cast<std::size_t>(i)), T);
  }
  return out;
}

}  // namespace

ScoreVector energy(const LogitMatrix& m, double temperature, Exec exec) {
  return score_rows(m, temperature, exec, Metric::Energy, row_energy);
}

ScoreVector entropy(const LogitMatrix& m, double temperature, Exec exec) {
  return score_rows(m, temperature, exec, Metric::Entropy, row_entropy);
}

RankVector rank_normalize(const ScoreVector& s) {
  const std::size_t n = s.scores.size();
  if (n < 2)
    throw DegenerateLength("rank_normalize needs n >= 2, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s.scores[a] != s.scores[b]) return s.scores[a] < s.scores[b];
    return a < b;
  });
  RankVector rv;
  rv.ranks.resize(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t pos = 0; pos < n; ++pos)
    rv.ranks[order[pos]] = static_cast<double>(pos) / denom;
  return rv;
}

ScoreVector consensus_cost(std::span<const RankVector> ranks) {
  if (ranks.empty()) throw ShapeMismatch("consensus_cost needs at least one rank vector");
  const std::size_t n = ranks[0].ranks.size();
  for (const auto& r : ranks)
    if (r.ranks.size() != n)
      throw ShapeMismatch("rank vector length " + std::to_string(r.ranks.size()) +
                          " != " + std::to_string(n));
  ScoreVector out;
  out.metric = Metric::Energy;
  out.temperature = 1.0;
  out.scores.assign(ranks[0].ranks.begin(), ranks[0].ranks.end());
  for (std::size_t k = 1; k < ranks.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      out.scores[i] = std::max(out.scores[i], ranks[k].ranks[i]);
  return out;
}

}  // namespace plada::scoring
