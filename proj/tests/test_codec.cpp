#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "oracles.hpp"
#include "plada/codec.hpp"
#include "plada/huffman.hpp"
#include "plada/logit_io.hpp"
#include "plada/rng.hpp"
#include "plada/zstd_wrap.hpp"

using namespace plada;

namespace {

SelectionResult make_sel(std::vector<std::uint64_t> kept, std::uint64_t n_ref) {
  SelectionResult sel;
  sel.kept = std::move(kept);
  sel.n_ref = n_ref;
  sel.keep_ratio = n_ref ? static_cast<double>(sel.kept.size()) / n_ref : 1.0;
  return sel;
}

std::vector<std::uint64_t> sample_distinct(Rng& rng, std::uint64_t n,
                                           std::uint64_t m) {
  std::unordered_set<std::uint64_t> seen;
  while (seen.size() < m) seen.insert(rng.below(n));
  std::vector<std::uint64_t> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

double round3(double x) {
  if (x == 0.0) return 0.0;
  const double mag = std::pow(10.0, 2 - std::floor(std::log10(std::abs(x))));
  return std::round(x * mag) / mag;
}

constexpr std::size_t kBodyOffset = 6;
constexpr std::size_t kMaskOffset = kBodyOffset + 8 + 4 + 8 + 1 + 1;

}  // namespace

TEST_CASE("raw_size_bits matches the published payload arithmetic") {
  const auto r = codec::raw_size_bits(14.2e6, 0.05, 64);
  const double mib = 8.0 * 1024.0 * 1024.0;
  CHECK(round3(r.mask_bits / mib) == round3(1.6928));
  CHECK(round3(r.total_bits_ideal / mib) == round3(2.2008));

  const auto small = codec::raw_size_bits(1000, 0.1, 16);
  CHECK(small.total_bits_ideal == 1400.0);
  CHECK(small.total_bits_packed == 1400.0);
  CHECK(small.total_bits_ideal / 8.0 == 175.0);

  const auto full = codec::raw_size_bits(5000, 1.0, 2);
  CHECK(full.total_bits_packed == 2.0 * 5000);
  CHECK(full.total_bits_ideal == 2.0 * 5000);

  CHECK_THROWS_AS(codec::raw_size_bits(10, 0.0, 4), InvalidKeepRatio);
  CHECK_THROWS_AS(codec::raw_size_bits(10, 0.5, 1), InvalidShape);
}

TEST_CASE("delta mask section layout for {5, 1000, 1001}") {
  const auto sel = make_sel({5, 1000, 1001}, 2000);
  const std::vector<std::uint32_t> labels{0, 1, 0};
  codec::EncodeOptions opts{codec::MaskEncoding::DeltaIndex,
                            codec::LabelEncoding::FixedWidth, false};
  const auto bytes = codec::encode(sel, labels, 2, opts);
  // width tag 2, deltas 5, 995, 1 little-endian
  CHECK(bytes[kMaskOffset] == 2);
  CHECK(bytes[kMaskOffset + 1] == 0x05);
  CHECK(bytes[kMaskOffset + 2] == 0x00);
  CHECK(bytes[kMaskOffset + 3] == 0xE3);
  CHECK(bytes[kMaskOffset + 4] == 0x03);
  CHECK(bytes[kMaskOffset + 5] == 0x01);
  CHECK(bytes[kMaskOffset + 6] == 0x00);
  const auto grid = codec::analyze(sel, labels, 2);
  CHECK(grid.measured[4].mask_section_bytes == 7);  // delta rows
}

TEST_CASE("bitmap of a fully kept n=8 selection is one 0xFF byte") {
  const auto sel = make_sel({0, 1, 2, 3, 4, 5, 6, 7}, 8);
  const std::vector<std::uint32_t> labels(8, 1);
  codec::EncodeOptions opts{codec::MaskEncoding::Bitmap,
                            codec::LabelEncoding::FixedWidth, false};
  const auto bytes = codec::encode(sel, labels, 3, opts);
  CHECK(bytes[kMaskOffset] == 0xFF);
}

TEST_CASE("huffman lengths and stream cost for AABC") {
  const std::vector<std::uint64_t> freq{2, 1, 1};
  const auto table = codec::HuffmanTable::from_frequencies(freq);
  CHECK(table.lengths() == std::vector<std::uint8_t>{1, 2, 2});
  CHECK(table.encoded_bits(freq) == 6);
  CHECK(table.encoded_bits(freq) == oracles::optimal_prefix_cost(freq));

  // Label section: 3 length bytes + 8 bit-length bytes + 1 stream byte.
  const auto sel = make_sel({0, 1, 2, 3}, 4);
  const std::vector<std::uint32_t> labels{0, 0, 1, 2};
  codec::EncodeOptions opts{codec::MaskEncoding::Bitmap,
                            codec::LabelEncoding::Huffman, false};
  const auto grid = codec::analyze(sel, labels, 3);
  CHECK(grid.measured[2].label_section_bytes == 3 + 8 + 1);
}

TEST_CASE("single-symbol huffman payload decodes to all-same labels") {
  const auto sel = make_sel({2, 5, 9}, 12);
  const std::vector<std::uint32_t> labels{4, 4, 4};
  codec::EncodeOptions opts{codec::MaskEncoding::DeltaIndex,
                            codec::LabelEncoding::Huffman, false};
  const auto bytes = codec::encode(sel, labels, 6, opts);
  const auto payload = codec::decode(bytes);
  CHECK(payload.labels == labels);
}

TEST_CASE("round-trip identity and canonical re-encode across all combos") {
  Rng rng(41);
  for (int it = 0; it < 150; ++it) {
    const std::uint64_t n_ref = 1 + static_cast<std::uint64_t>(std::pow(
                                        10.0, 5.0 * rng.uniform()));
    const std::uint64_t m = 1 + rng.below(std::min<std::uint64_t>(n_ref, 3000));
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(364));
    const auto sel = make_sel(sample_distinct(rng, n_ref, m), n_ref);
    std::vector<std::uint32_t> labels(m);
    const bool skewed = (it % 2) == 0;
    for (auto& l : labels) {
      if (skewed) {
        const double u = rng.uniform();
        l = static_cast<std::uint32_t>(static_cast<double>(k) * u * u * u);
        l = std::min(l, k - 1);
      } else {
        l = static_cast<std::uint32_t>(rng.below(k));
      }
    }
    for (auto mask : {codec::MaskEncoding::Bitmap, codec::MaskEncoding::DeltaIndex})
      for (auto le : {codec::LabelEncoding::FixedWidth, codec::LabelEncoding::Huffman})
        for (bool z : {false, true}) {
          const codec::EncodeOptions opts{mask, le, z};
          const auto bytes = codec::encode(sel, labels, k, opts);
          const auto payload = codec::decode(bytes);
          REQUIRE(payload.n_ref == n_ref);
          REQUIRE(payload.k == k);
          REQUIRE(payload.kept == sel.kept);
          REQUIRE(payload.labels == labels);
          REQUIRE(payload.mask_encoding == mask);
          REQUIRE(payload.label_encoding == le);
          REQUIRE(payload.zstd_wrapped == z);
          const auto again = codec::encode(payload.selection(), payload.labels,
                                           payload.k, opts);
          REQUIRE(again == bytes);
        }
  }
}

TEST_CASE("truncating a container never decodes silently") {
  Rng rng(42);
  const auto sel = make_sel(sample_distinct(rng, 700, 60), 700);
  std::vector<std::uint32_t> labels(60);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(9));
  for (auto mask : {codec::MaskEncoding::Bitmap, codec::MaskEncoding::DeltaIndex})
    for (auto le : {codec::LabelEncoding::FixedWidth, codec::LabelEncoding::Huffman})
      for (bool z : {false, true}) {
        const auto bytes = codec::encode(sel, labels, 9, {mask, le, z});
        for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
          const std::span<const std::uint8_t> prefix(bytes.data(), cut);
          bool truncated_or_bitlength = false;
          try {
            codec::decode(prefix);
          } catch (const Truncated&) {
            truncated_or_bitlength = true;
          } catch (const BitLengthMismatch&) {
            truncated_or_bitlength = true;
          }
          CHECK(truncated_or_bitlength);
        }
      }
}

TEST_CASE("decode rejects malformed and non-canonical containers") {
  const auto sel = make_sel({1, 5, 6}, 16);
  const std::vector<std::uint32_t> labels{0, 2, 1};
  const codec::EncodeOptions plain{codec::MaskEncoding::DeltaIndex,
                                   codec::LabelEncoding::FixedWidth, false};
  const auto bytes = codec::encode(sel, labels, 3, plain);

  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(codec::decode(bad), BadMagic);
  }
  SUBCASE("unknown version") {
    auto bad = bytes;
    bad[4] = 0x02;
    CHECK_THROWS_AS(codec::decode(bad), UnsupportedVersion);
  }
  SUBCASE("reserved flag bits") {
    auto bad = bytes;
    bad[5] |= 0x80;
    CHECK_THROWS_AS(codec::decode(bad), CanonicalViolation);
  }
  SUBCASE("non-minimal delta width") {
    auto bad = bytes;
    // Rebuild the mask section with width 2 instead of the minimal 1.
    std::vector<std::uint8_t> rebuilt(bad.begin(), bad.begin() + kMaskOffset);
    rebuilt.push_back(2);
    for (std::uint64_t delta : {1, 4, 1}) {
      rebuilt.push_back(static_cast<std::uint8_t>(delta));
      rebuilt.push_back(0);
    }
    rebuilt.insert(rebuilt.end(), bad.end() - 1, bad.end());  // label byte
    CHECK_THROWS_AS(codec::decode(rebuilt), CanonicalViolation);
  }
  SUBCASE("zero delta") {
    auto bad = bytes;
    bad[kMaskOffset + 2] = 0;  // second delta
    CHECK_THROWS_AS(codec::decode(bad), NonMonotoneIndices);
  }
  SUBCASE("trailing byte") {
    auto bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(codec::decode(bad), CanonicalViolation);
  }
  SUBCASE("index past n_ref") {
    auto bad = bytes;
    bad[kMaskOffset + 3] = 0xF0;  // third delta: index 1+4+240 >= 16
    CHECK_THROWS_AS(codec::decode(bad), IndexOverflow);
  }
}

TEST_CASE("decode rejects bitmap padding bits and count mismatches") {
  const auto sel = make_sel({0, 3}, 10);
  const std::vector<std::uint32_t> labels{1, 0};
  const codec::EncodeOptions opts{codec::MaskEncoding::Bitmap,
                                  codec::LabelEncoding::FixedWidth, false};
  const auto bytes = codec::encode(sel, labels, 2, opts);
  SUBCASE("padding bit set") {
    auto bad = bytes;
    bad[kMaskOffset + 1] |= 0x80;  // bit 15 >= n_ref=10
    CHECK_THROWS_AS(codec::decode(bad), CanonicalViolation);
  }
  SUBCASE("popcount != m") {
    auto bad = bytes;
    bad[kMaskOffset] |= 0x02;  // extra index 1
    CHECK_THROWS_AS(codec::decode(bad), BitLengthMismatch);
  }
}

TEST_CASE("decode validates huffman tables") {
  // Hand-built container: n_ref=4, k=3, m=4, delta mask, huffman labels.
  auto u64le = [](std::vector<std::uint8_t>& v, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  };
  auto base = [&](std::vector<std::uint8_t> lengths, std::uint64_t bitlen,
                  std::vector<std::uint8_t> stream) {
    std::vector<std::uint8_t> v{'P', 'L', 'P', '1', 0x01, 0x00};
    u64le(v, 4);                                  // n_ref
    for (int i = 0; i < 4; ++i) v.push_back(i == 0 ? 3 : 0);  // k = 3
    u64le(v, 4);                                  // m
    v.push_back(1);                               // delta mask
    v.push_back(1);                               // huffman labels
    v.push_back(1);                               // width tag
    v.insert(v.end(), {0, 1, 1, 1});              // indices 0,1,2,3
    v.insert(v.end(), lengths.begin(), lengths.end());
    u64le(v, bitlen);
    v.insert(v.end(), stream.begin(), stream.end());
    return v;
  };

  SUBCASE("kraft violation") {
    // Three length-1 codes cannot coexist.
    const auto bad = base({1, 1, 1}, 4, {0x00});
    CHECK_THROWS_AS(codec::decode(bad), KraftViolation);
  }
  SUBCASE("valid but non-canonical table") {
    // Labels 0,0,1,2. The canonical table is {1,2,2}; store {2,1,2} instead:
    // canonical codes then are 1->0, 0->10, 2->11, stream 10 10 0 11 = 7 bits.
    const auto bad = base({2, 1, 2}, 7, {0b10100110});
    CHECK_THROWS_AS(codec::decode(bad), CanonicalViolation);
  }
  SUBCASE("stream with stray set padding bit") {
    // Canonical table {1,2,2}: 0->0, 1->10, 2->11; labels 0,0,1,2 = 0 0 10 11,
    // 6 bits. Set a padding bit afterwards.
    const auto bad = base({1, 2, 2}, 6, {0b00101101});
    CHECK_THROWS_AS(codec::decode(bad), CanonicalViolation);
  }
  SUBCASE("bit length not matching the symbol count") {
    const auto bad = base({1, 2, 2}, 8, {0b00101100});
    CHECK_THROWS_AS(codec::decode(bad), BitLengthMismatch);
  }
  SUBCASE("the canonical equivalent is accepted") {
    const auto good = base({1, 2, 2}, 6, {0b00101100});
    const auto payload = codec::decode(good);
    CHECK(payload.labels == std::vector<std::uint32_t>{0, 0, 1, 2});
  }
}

TEST_CASE("encode validation errors") {
  const std::vector<std::uint32_t> labels{0, 1};
  codec::EncodeOptions opts;
  CHECK_THROWS_AS(codec::encode(make_sel({3, 9}, 8), labels, 2, opts),
                  IndexOverflow);
  CHECK_THROWS_AS(codec::encode(make_sel({5, 3}, 8), labels, 2, opts),
                  NonMonotoneIndices);
  CHECK_THROWS_AS(codec::encode(make_sel({1, 3}, 8), labels, 1, opts),
                  InvalidShape);
  const std::vector<std::uint32_t> big{0, 4};
  CHECK_THROWS_AS(codec::encode(make_sel({1, 3}, 8), big, 4, opts),
                  LabelOutOfRange);
  const std::vector<std::uint32_t> short_labels{0};
  CHECK_THROWS_AS(codec::encode(make_sel({1, 3}, 8), short_labels, 4, opts),
                  ShapeMismatch);
}

TEST_CASE("huffman stream lengths sit inside the entropy band") {
  Rng rng(43);
  for (int it = 0; it < 50; ++it) {
    const std::size_t k = 2 + rng.below(40);
    std::vector<std::uint64_t> freq(k, 0);
    std::uint64_t n = 0;
    for (auto& f : freq) {
      f = rng.below(200);
      n += f;
    }
    if (n == 0) continue;
    const auto table = codec::HuffmanTable::from_frequencies(freq);
    const double h = oracles::entropy_bits(freq);
    const auto bits = static_cast<double>(table.encoded_bits(freq));
    CHECK(bits >= h * static_cast<double>(n) - 1e-6);
    CHECK(bits <= (h + 1.0) * static_cast<double>(n) + 1e-6);
  }
}

TEST_CASE("dyadic frequency vectors code at exactly n*H bits") {
  const std::vector<std::vector<std::uint64_t>> dyadics{
      {4, 2, 1, 1}, {8, 4, 2, 1, 1}, {2, 2}, {16, 8, 4, 2, 1, 1}, {1, 1}};
  for (const auto& freq : dyadics) {
    std::uint64_t n = 0;
    for (auto f : freq) n += f;
    const auto table = codec::HuffmanTable::from_frequencies(freq);
    const double expected = oracles::entropy_bits(freq) * static_cast<double>(n);
    CHECK(static_cast<double>(table.encoded_bits(freq)) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("huffman equals the exhaustive optimal prefix code oracle") {
  Rng rng(44);
  for (int it = 0; it < 300; ++it) {
    const std::size_t k = 1 + rng.below(5);
    std::vector<std::uint64_t> freq(k, 0);
    std::uint64_t n = 0;
    for (auto& f : freq) {
      f = rng.below(5);
      n += f;
    }
    if (n == 0 || n > 12) continue;
    const auto table = codec::HuffmanTable::from_frequencies(freq);
    CHECK(table.encoded_bits(freq) == oracles::optimal_prefix_cost(freq));
  }
}

TEST_CASE("fixed-width and bitmap section sizes follow the formulas") {
  Rng rng(45);
  for (int it = 0; it < 40; ++it) {
    const std::uint64_t n_ref = 1 + rng.below(5000);
    const std::uint64_t m = 1 + rng.below(n_ref);
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(300));
    const auto sel = make_sel(sample_distinct(rng, n_ref, m), n_ref);
    std::vector<std::uint32_t> labels(m);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(k));
    const auto grid = codec::analyze(sel, labels, k);
    const std::uint64_t width = std::bit_width(std::uint64_t{k} - 1);
    for (const auto& row : grid.measured) {
      if (row.mask == codec::MaskEncoding::Bitmap)
        CHECK(row.mask_section_bytes == (n_ref + 7) / 8);
      if (row.label == codec::LabelEncoding::FixedWidth)
        CHECK(row.label_section_bytes == (m * width + 7) / 8);
    }
  }
}

TEST_CASE("zstd wrap round-trips and stays within the framing slack") {
  Rng rng(46);
  SUBCASE("random bodies round-trip") {
    for (int it = 0; it < 20; ++it) {
      std::vector<std::uint8_t> body(rng.below(50000));
      for (auto& b : body) b = static_cast<std::uint8_t>(rng.bits());
      CHECK(zstdwrap::decompress(zstdwrap::compress(body)) == body);
    }
  }
  SUBCASE("compressible bodies of >= 4 KiB never grow past 64 bytes of slack") {
    for (std::size_t size : {4096, 16384, 262144}) {
      std::vector<std::uint8_t> body(size);
      for (std::size_t i = 0; i < size; ++i)
        body[i] = static_cast<std::uint8_t>((i / 64) & 0xFF);
      const auto frame = zstdwrap::compress(body);
      CHECK(frame.size() <= body.size() + 64);
      CHECK(zstdwrap::decompress(frame) == body);
    }
  }
}

TEST_CASE("analyze reports the labels-only convention at p=1") {
  const std::uint64_t n = 64;
  std::vector<std::uint64_t> kept(n);
  std::iota(kept.begin(), kept.end(), 0);
  const auto sel = make_sel(std::move(kept), n);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % 5;
  const auto grid = codec::analyze(sel, labels, 5);
  REQUIRE(grid.labels_only.has_value());
  CHECK(grid.labels_only->mask_bits == 0.0);
  CHECK(grid.labels_only->total_bits_packed ==
        static_cast<double>(n) * 3.0);  // ceil(log2 5) = 3
  CHECK(grid.analytic.mask_bits == static_cast<double>(n));
}

TEST_CASE("delta vs bitmap crossover at small scale") {
  Rng rng(47);
  const std::uint64_t n_ref = 100000;
  const auto sparse = make_sel(sample_distinct(rng, n_ref, 100), n_ref);
  const auto dense = make_sel(sample_distinct(rng, n_ref, 50000), n_ref);
  std::vector<std::uint32_t> sparse_labels(100, 0), dense_labels(50000, 0);
  const auto sparse_grid = codec::analyze(sparse, sparse_labels, 2);
  const auto dense_grid = codec::analyze(dense, dense_labels, 2);
  auto section = [](const codec::SizeGrid& g, codec::MaskEncoding m) {
    for (const auto& row : g.measured)
      if (row.mask == m && !row.zstd) return row.mask_section_bytes;
    return std::uint64_t{0};
  };
  CHECK(section(sparse_grid, codec::MaskEncoding::DeltaIndex) <
        section(sparse_grid, codec::MaskEncoding::Bitmap));
  CHECK(section(dense_grid, codec::MaskEncoding::Bitmap) <
        section(dense_grid, codec::MaskEncoding::DeltaIndex));
}

TEST_CASE("analyze agrees with encode byte for byte") {
  Rng rng(48);
  const auto sel = make_sel(sample_distinct(rng, 4000, 320), 4000);
  std::vector<std::uint32_t> labels(320);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(11));
  const auto grid = codec::analyze(sel, labels, 11);
  for (const auto& row : grid.measured) {
    const codec::EncodeOptions opts{row.mask, row.label, row.zstd};
    CHECK(row.container_bytes == codec::encode(sel, labels, 11, opts).size());
  }
}
