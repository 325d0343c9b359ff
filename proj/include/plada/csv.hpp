// CSV import/export for the CLI surfaces. Dialect: comma-separated, no
// quoting, header row, LF line endings. Doubles render with 17 significant
// digits so files round-trip exactly.
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>

#include "plada/types.hpp"

namespace plada::csv {

std::string g17(double v);

// `row_index,score`
void write_scores(std::ostream& os, std::span<const double> scores);
std::vector<double> read_scores(std::istream& is);

// `index`
void write_indices(std::ostream& os, std::span<const std::uint64_t> indices);
std::vector<std::uint64_t> read_indices(std::istream& is);

// `index,label`
void write_labels(std::ostream& os, std::span<const std::uint64_t> indices,
                  std::span<const std::uint32_t> labels);
std::vector<std::pair<std::uint64_t, std::uint32_t>> read_labels(std::istream& is);

// `index,weight`
void write_weights(std::ostream& os, std::span<const std::uint64_t> indices,
                   std::span<const double> weights);

// k x k (or n x d) matrix with header c0..c{cols-1}
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);

// `a_index,b_index`
void write_pairs(std::ostream& os,
                 std::span<const std::pair<std::uint64_t, std::uint64_t>> pairs);

}  // namespace plada::csv
