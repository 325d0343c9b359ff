// Zstandard framing for payload bodies (RFC 8878, level 19).
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace plada::zstdwrap {

constexpr int kLevel = 19;

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> body,
                                   int level = kLevel);

// Inverse of compress. Throws Truncated on malformed or cut-off frames.
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> frame);

}  // namespace plada::zstdwrap
