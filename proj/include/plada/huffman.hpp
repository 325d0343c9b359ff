// Canonical Huffman codes over the label alphabet.
//
// Construction is fully deterministic: tree nodes merge by
// (weight, smallest contained symbol id) and codes are assigned in
// (length, symbol id) order, so two encoders built from the same frequency
// vector emit identical tables and bitstreams. A single-symbol alphabet gets
// a 1-bit code. Lengths above 64 bits cannot occur for 64-bit counts.
#pragma once

#include <span>

#include "plada/types.hpp"

namespace plada::codec {

class HuffmanTable {
 public:
  // Optimal code lengths for the given frequencies (0 entries = absent).
  static HuffmanTable from_frequencies(std::span<const std::uint64_t> freq);

  // Rebuilds the canonical code from stored lengths. Validates length bounds
  // and the Kraft inequality (throws KraftViolation).
  static HuffmanTable from_lengths(std::vector<std::uint8_t> lengths);

  const std::vector<std::uint8_t>& lengths() const { return lengths_; }

  // Canonical codeword for a present symbol, right-aligned in the u64.
  std::uint64_t code_of(std::uint32_t symbol) const { return codes_[symbol]; }
  std::uint8_t length_of(std::uint32_t symbol) const { return lengths_[symbol]; }

  // Total stream cost in bits: sum over symbols of freq * length.
  std::uint64_t encoded_bits(std::span<const std::uint64_t> freq) const;

  // Canonical bit-by-bit decoder state.
  struct Decoder {
    // Feed one bit; returns the decoded symbol or -1 if more bits are needed.
    // Throws BitLengthMismatch when the bit sequence cannot be a codeword.
    std::int64_t push_bit(int bit);

   private:
    friend class HuffmanTable;
    const HuffmanTable* table_ = nullptr;
    std::uint64_t code_ = 0;
    std::uint32_t len_ = 0;
  };
  Decoder decoder() const;

 private:
  void assign_canonical_codes();

  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint64_t> codes_;
  // Per length: first canonical code, count of symbols, offset into sorted_.
  std::uint8_t max_len_ = 0;
  std::vector<std::uint64_t> first_code_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> first_index_;
  std::vector<std::uint32_t> sorted_;  // present symbols in (length, id) order
};

}  // namespace plada::codec
