// PLG1 logit file I/O and label histograms.
//
// PLG1 layout, little-endian:
//   magic "PLG1" (4 bytes) | n u64 | k u32 | n*k IEEE-754 binary32, row-major
#pragma once

#include <filesystem>
#include <span>

#include "plada/types.hpp"

namespace plada::core {

// Parses a PLG1 file; values are promoted to 64-bit. Errors name the byte
// offset of the offending data.
LogitMatrix read_logits(const std::filesystem::path& path);

// Writes the matrix as PLG1. Values are quantized to 32-bit once; writing a
// matrix read back from disk reproduces the file byte for byte.
void write_logits(const LogitMatrix& m, const std::filesystem::path& path);

// Per-class counts over hard labels. Counts sum to labels.size().
std::vector<std::uint64_t> class_histogram(std::span<const std::uint32_t> labels,
                                           std::uint32_t k);

}  // namespace plada::core
