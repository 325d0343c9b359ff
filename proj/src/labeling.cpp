#include "plada/labeling.hpp"

#include <algorithm>
#include <cmath>

namespace plada::labeling {

namespace {

constexpr double kVarFloor = 1e-12;
constexpr double kPrecisionMin = 0.1;
constexpr double kPrecisionMax = 1e6;

std::uint32_t row_argmax(std::span<const double> row) {
  std::uint32_t best = 0;
  for (std::uint32_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

void softmax_into(std::span<const double> row, double T, std::span<double> out) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double z = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = std::exp((row[j] - mx) / T);
    z += out[j];
  }
  for (std::size_t j = 0; j < row.size(); ++j) out[j] /= z;
}

void check_labels(const LogitMatrix& m, std::span<const std::uint32_t> hard) {
  if (hard.size() != m.rows())
    throw ShapeMismatch("labels length " + std::to_string(hard.size()) +
                        " != matrix rows " + std::to_string(m.rows()));
  for (std::size_t i = 0; i < hard.size(); ++i)
    if (hard[i] >= m.cols())
      throw LabelOutOfRange("label " + std::to_string(hard[i]) + " at row " +
                            std::to_string(i) + " >= k=" + std::to_string(m.cols()));
}

}  // namespace

std::vector<std::uint32_t> hard_labels(const LogitMatrix& m, Exec exec) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.rows());
  std::vector<std::uint32_t> labels(m.rows());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      labels[i] = row_argmax(m.row(static_cast<std::size_t>(i)));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      labels[i] = row_argmax(m.row(static_cast<std::size_t>(i)));
  }
  return labels;
}

Matrix softmax_rows(const LogitMatrix& m, double temperature, Exec exec) {
  if (!(temperature > 0.0))
    throw Error("temperature must be positive, got " + std::to_string(temperature));
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.rows());
  Matrix probs(m.rows(), m.cols());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      softmax_into(m.row(static_cast<std::size_t>(i)), temperature,
                   probs.row(static_cast<std::size_t>(i)));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      softmax_into(m.row(static_cast<std::size_t>(i)), temperature,
                   probs.row(static_cast<std::size_t>(i)));
  }
  return probs;
}

Matrix average_soft_labels(const LogitMatrix& m,
                           std::span<const std::uint32_t> hard,
                           double temperature, EmptyClassPolicy policy,
                           Exec exec) {
  check_labels(m, hard);
  const std::size_t k = m.cols();
  const Matrix probs = softmax_rows(m, temperature, exec);

  // Accumulation stays serial in index-ascending order so results do not
  // depend on the thread count.
  Matrix proto(k, k);
  std::vector<std::uint64_t> count(k, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::uint32_t c = hard[i];
    ++count[c];
    auto dst = proto.row(c);
    auto src = probs.row(i);
    for (std::size_t j = 0; j < k; ++j) dst[j] += src[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) {
      if (policy == EmptyClassPolicy::Error)
        throw EmptyClass("class " + std::to_string(c) + " has no assigned rows");
      for (std::size_t j = 0; j < k; ++j)
        proto.at(c, j) = 1.0 / static_cast<double>(k);
    } else {
      for (std::size_t j = 0; j < k; ++j)
        proto.at(c, j) /= static_cast<double>(count[c]);
    }
  }
  return proto;
}

Matrix dirichlet_mom(const LogitMatrix& m, std::span<const std::uint32_t> hard,
                     double temperature, EmptyClassPolicy policy, Exec exec) {
  check_labels(m, hard);
  const std::size_t k = m.cols();
  const Matrix probs = softmax_rows(m, temperature, exec);

  Matrix mean(k, k);
  std::vector<double> sq(k, 0.0);  // sum of squares of the class-own probability
  std::vector<std::uint64_t> count(k, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::uint32_t c = hard[i];
    ++count[c];
    auto dst = mean.row(c);
    auto src = probs.row(i);
    for (std::size_t j = 0; j < k; ++j) dst[j] += src[j];
    sq[c] += src[c] * src[c];
  }

  Matrix alphas(k, k);
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) {
      if (policy == EmptyClassPolicy::Error)
        throw EmptyClass("class " + std::to_string(c) + " has no assigned rows");
      for (std::size_t j = 0; j < k; ++j) alphas.at(c, j) = 1.0;
      continue;
    }
    const double nc = static_cast<double>(count[c]);
    for (std::size_t j = 0; j < k; ++j) mean.at(c, j) /= nc;
    const double mu = mean.at(c, c);
    double var = sq[c] / nc - mu * mu;
    var = std::max(var, kVarFloor);
    double s = mu * (1.0 - mu) / var - 1.0;
    s = std::clamp(s, kPrecisionMin, kPrecisionMax);
    // Mean probabilities can underflow to exactly 0 for extreme logits;
    // concentrations must stay strictly positive.
    for (std::size_t j = 0; j < k; ++j)
      alphas.at(c, j) = std::max(mean.at(c, j) * s, kVarFloor);
  }
  return alphas;
}

void validate_label_set(const LabelSet& set, std::uint32_t k) {
  for (std::size_t i = 0; i < set.hard.size(); ++i)
    if (set.hard[i] >= k)
      throw LabelOutOfRange("hard label " + std::to_string(set.hard[i]) +
                            " at row " + std::to_string(i) +
                            " >= k=" + std::to_string(k));
  auto check_square = [k](const Matrix& m, const char* what) {
    if (m.rows != k || m.cols != k)
      throw ShapeMismatch(std::string(what) + " must be " + std::to_string(k) +
                          "x" + std::to_string(k));
  };
  if (set.soft_prototypes) {
    check_square(*set.soft_prototypes, "soft prototypes");
    for (std::size_t c = 0; c < k; ++c) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double v = set.soft_prototypes->at(c, j);
        if (v < 0.0)
          throw InvalidShape("prototype entry below zero in row " +
                             std::to_string(c));
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidShape("prototype row " + std::to_string(c) +
                           " sums to " + std::to_string(sum));
    }
  }
  if (set.dirichlet_alphas) {
    check_square(*set.dirichlet_alphas, "dirichlet concentrations");
    for (double v : set.dirichlet_alphas->data)
      if (!(v > 0.0))
        throw InvalidShape("dirichlet concentration must be positive");
  }
  if (set.weights) {
    if (set.weights->size() != set.hard.size())
      throw ShapeMismatch("weights length " + std::to_string(set.weights->size()) +
                          " != hard label count " + std::to_string(set.hard.size()));
    double mean = 0.0;
    for (double v : *set.weights) {
      if (!(v > 0.0)) throw InvalidShape("weights must be positive");
      mean += v;
    }
    mean /= static_cast<double>(set.weights->size());
    if (std::abs(mean - 1.0) > 1e-9)
      throw InvalidShape("weights mean is " + std::to_string(mean));
  }
}

std::vector<double> importance_weights(const ScoreVector& s,
                                       double weight_temperature) {
  if (!(weight_temperature > 0.0))
    throw Error("weight temperature must be positive, got " +
                std::to_string(weight_temperature));
  const std::size_t n = s.scores.size();
  if (n == 0) return {};
  double mn = s.scores[0];
  for (double v : s.scores) mn = std::min(mn, v);
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-(s.scores[i] - mn) / weight_temperature);
    sum += w[i];
  }
  const double mean = sum / static_cast<double>(n);
  for (double& v : w) v /= mean;
  return w;
}

}  // namespace plada::labeling
