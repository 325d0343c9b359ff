// Shared domain types and the error hierarchy used by every module.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plada {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadMagic : Error { using Error::Error; };
struct Truncated : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct InvalidShape : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };
struct DegenerateLength : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct InvalidKeepRatio : Error { using Error::Error; };
struct EmptyClass : Error { using Error::Error; };
struct IndexOverflow : Error { using Error::Error; };
struct NonMonotoneIndices : Error { using Error::Error; };
struct BitLengthMismatch : Error { using Error::Error; };
struct KraftViolation : Error { using Error::Error; };
struct CanonicalViolation : Error { using Error::Error; };
struct UnsupportedVersion : Error { using Error::Error; };
struct CoordinateOutOfRange : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

// Kernel execution selector. Parallel variants must produce outputs that are
// bit-identical to the serial reference.
enum class Exec { Serial, Parallel };

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles
// ---------------------------------------------------------------------------

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows*cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> d)
      : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
      throw InvalidShape("Matrix: data size " + std::to_string(data.size()) +
                         " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  bool operator==(const Matrix&) const = default;
};

// ---------------------------------------------------------------------------
// Core domain types
// ---------------------------------------------------------------------------

// n x k teacher logits over the reference set. 64-bit in memory, 32-bit on
// disk (PLG1). Invariants: n >= 1, k >= 2, every value finite.
class LogitMatrix {
 public:
  LogitMatrix(std::size_t n, std::size_t k, std::vector<double> values)
      : m_(n, k, std::move(values)) {
    if (n < 1 || k < 2)
      throw InvalidShape("LogitMatrix: need n >= 1 and k >= 2, got n=" +
                         std::to_string(n) + " k=" + std::to_string(k));
    for (std::size_t i = 0; i < m_.data.size(); ++i)
      if (!std::isfinite(m_.data[i]))
        throw NonFiniteValue("LogitMatrix: non-finite value at flat index " +
                             std::to_string(i));
  }

  std::size_t rows() const { return m_.rows; }
  std::size_t cols() const { return m_.cols; }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  double at(std::size_t i, std::size_t j) const { return m_.at(i, j); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

enum class Metric { Energy, Entropy };

// Per-row uncertainty scores plus the settings that produced them.
struct ScoreVector {
  std::vector<double> scores;
  Metric metric = Metric::Energy;
  double temperature = 1.0;
};

// Normalized ranks in [0,1]; rank 0 is the best (lowest) score.
struct RankVector {
  std::vector<double> ranks;
};

enum class SelectionMethod { TopFraction, Inverse, Consensus, SafetyNet };
enum class Direction { LowestFirst, HighestFirst };

// Per-class reserve quotas K_c for safety-net selection.
struct QuotaPlan {
  double alpha = 0.0;
  double reserve_fraction = 0.0;
  std::vector<std::uint64_t> quotas;  // one per class, quota_c <= N_c
  std::uint64_t leftover_to_global = 0;
};

// Sorted kept indices plus provenance.
struct SelectionResult {
  std::vector<std::uint64_t> kept;  // strictly increasing, < n_ref
  std::uint64_t n_ref = 0;
  SelectionMethod method = SelectionMethod::TopFraction;
  double keep_ratio = 1.0;
  std::optional<QuotaPlan> quota_plan;
};

// Transmissible label artifacts derived from logits.
struct LabelSet {
  std::vector<std::uint32_t> hard;            // one class id per kept row
  std::optional<Matrix> soft_prototypes;      // k x k, row-stochastic
  std::optional<Matrix> dirichlet_alphas;     // k x k, all entries > 0
  std::optional<std::vector<double>> weights; // per kept row, mean 1
};

// Number of rows a keep ratio retains: floor(n*p), never below 1.
inline std::uint64_t kept_count(std::uint64_t n, double p) {
  if (!(p > 0.0) || p > 1.0)
    throw InvalidKeepRatio("keep ratio must be in (0,1], got " + std::to_string(p));
  auto c = static_cast<std::uint64_t>(std::floor(static_cast<double>(n) * p));
  if (c == 0) c = 1;
  if (c > n) c = n;
  return c;
}

}  // namespace plada
