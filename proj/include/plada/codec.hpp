// Bit-exact payload containers (PLP1) and size analytics.
//
// Container layout, all integers little-endian:
//   magic "PLP1" | version 0x01 | flags (bit0 = body is a Zstandard frame,
//   level 19; other bits zero) | body
// Body:
//   n_ref u64 | k u32 | m u64 | mask_encoding u8 | label_encoding u8 |
//   mask section | label section
// Mask section:
//   Bitmap (0):     ceil(n_ref/8) bytes, index i lives at byte i/8 bit i%8
//                   (LSB first); padding bits are zero.
//   DeltaIndex (1): width tag u8 (smallest of 1/2/4/8 that fits the largest
//                   delta), then m deltas. The first delta is the first kept
//                   index itself, later ones the gap to the previous index.
// Label section:
//   FixedWidth (0): m labels of ceil(log2 k) bits each, packed MSB first.
//   Huffman (1):    k code lengths (u8, 0 = absent), stream bit length u64,
//                   then the padded MSB-first bitstream.
//
// decode() accepts only canonical containers (minimal delta width, zero
// padding, the canonical Huffman table of the decoded label frequencies, no
// trailing bytes), which makes encode(decode(bytes)) == bytes a checked
// guarantee rather than a convention.
#pragma once

#include <iosfwd>
#include <span>

#include "plada/types.hpp"

namespace plada::codec {

enum class MaskEncoding : std::uint8_t { Bitmap = 0, DeltaIndex = 1 };
enum class LabelEncoding : std::uint8_t { FixedWidth = 0, Huffman = 1 };

struct EncodeOptions {
  MaskEncoding mask = MaskEncoding::DeltaIndex;
  LabelEncoding label = LabelEncoding::Huffman;
  bool zstd = true;
};

// Decoded container contents.
struct Payload {
  std::uint64_t n_ref = 0;
  std::uint32_t k = 0;
  std::vector<std::uint64_t> kept;
  std::vector<std::uint32_t> labels;
  MaskEncoding mask_encoding = MaskEncoding::Bitmap;
  LabelEncoding label_encoding = LabelEncoding::FixedWidth;
  bool zstd_wrapped = false;

  SelectionResult selection() const;
};

std::vector<std::uint8_t> encode(const SelectionResult& sel,
                                 std::span<const std::uint32_t> labels,
                                 std::uint32_t k, const EncodeOptions& opts);

Payload decode(std::span<const std::uint8_t> bytes);

// Analytic payload cost in bits for a keep ratio p over n_ref rows:
// mask = n_ref, labels = n_ref * p * log2(k) (ideal) or with ceil(log2 k)
// (packed).
struct RawSize {
  double mask_bits = 0;
  double label_bits_ideal = 0;
  double label_bits_packed = 0;
  double total_bits_ideal = 0;
  double total_bits_packed = 0;
};
RawSize raw_size_bits(double n_ref, double p, std::uint32_t k);

// Measured sizes for one selection under every encoding combination, plus
// the analytic raw sizes at p = m/n_ref.
struct SizeGrid {
  struct Measured {
    MaskEncoding mask;
    LabelEncoding label;
    bool zstd;
    std::uint64_t mask_section_bytes;   // pre-zstd
    std::uint64_t label_section_bytes;  // pre-zstd
    std::uint64_t container_bytes;      // final, wrapped when zstd is on
  };
  std::vector<Measured> measured;  // 8 rows
  RawSize analytic;
  // No-filter convention: when every row is kept, the payload reduces to the
  // labels alone and the mask carries no information.
  std::optional<RawSize> labels_only;
};
SizeGrid analyze(const SelectionResult& sel, std::span<const std::uint32_t> labels,
                 std::uint32_t k);
void write_size_grid_csv(std::ostream& os, const SizeGrid& grid);

}  // namespace plada::codec
