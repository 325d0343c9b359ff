#include "plada/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <ostream>

#include "plada/huffman.hpp"
#include "plada/logit_io.hpp"
#include "plada/zstd_wrap.hpp"

namespace plada::codec {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'P', '1'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::uint8_t kFlagZstd = 0x01;

std::uint32_t fixed_label_width(std::uint32_t k) {
  return static_cast<std::uint32_t>(std::bit_width(std::uint64_t{k} - 1));
}

std::uint32_t delta_width(std::uint64_t max_delta) {
  if (max_delta <= 0xFF) return 1;
  if (max_delta <= 0xFFFF) return 2;
  if (max_delta <= 0xFFFFFFFF) return 4;
  return 8;
}

// --- little-endian byte buffer ---------------------------------------------

struct Writer {
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::span<const std::uint8_t> src) {
    bytes.insert(bytes.end(), src.begin(), src.end());
  }
};

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size())
      throw Truncated(std::string("PLP1: body ends at byte ") +
                      std::to_string(bytes.size()) + " while reading " + what +
                      " at offset " + std::to_string(pos));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes[pos++];
  }
  template <typename T>
  T uint(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(bytes[pos + i]) << (8 * i);
    pos += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes.subspan(pos, n);
    pos += n;
    return s;
  }
};

// --- MSB-first bit packing ---------------------------------------------------

struct BitWriter {
  std::vector<std::uint8_t> bytes;
  std::uint32_t used = 0;  // bits used in the last byte

  void push(std::uint64_t value, std::uint32_t nbits) {
    for (std::uint32_t i = nbits; i-- > 0;) {
      if (used == 0) bytes.push_back(0);
      const int bit = static_cast<int>((value >> i) & 1);
      bytes.back() |= static_cast<std::uint8_t>(bit << (7 - used));
      used = (used + 1) & 7;
    }
  }
};

struct BitReader {
  std::span<const std::uint8_t> bytes;
  std::uint64_t pos = 0;  // bit cursor

  int next() {
    const std::uint64_t byte = pos >> 3;
    const int bit = (bytes[byte] >> (7 - (pos & 7))) & 1;
    ++pos;
    return bit;
  }
};

void check_padding_zero(std::span<const std::uint8_t> bytes, std::uint64_t bits,
                        const char* what) {
  if (bits == 0 && bytes.empty()) return;
  const std::uint64_t last = bytes.size() - 1;
  const std::uint32_t used = static_cast<std::uint32_t>(bits - 8 * last);
  if (used < 8 && (bytes[last] & ((1u << (8 - used)) - 1)) != 0)
    throw CanonicalViolation(std::string(what) + ": nonzero padding bits");
}

// --- section builders --------------------------------------------------------

std::vector<std::uint8_t> build_mask_section(std::span<const std::uint64_t> kept,
                                             std::uint64_t n_ref,
                                             MaskEncoding enc) {
  if (enc == MaskEncoding::Bitmap) {
    std::vector<std::uint8_t> bytes((n_ref + 7) / 8, 0);
    for (std::uint64_t idx : kept)
      bytes[idx >> 3] |= static_cast<std::uint8_t>(1u << (idx & 7));
    return bytes;
  }
  std::uint64_t max_delta = 0;
  std::uint64_t prev = 0;
  bool first = true;
  for (std::uint64_t idx : kept) {
    const std::uint64_t d = first ? idx : idx - prev;
    max_delta = std::max(max_delta, d);
    prev = idx;
    first = false;
  }
  const std::uint32_t width = delta_width(max_delta);
  Writer w;
  w.u8(static_cast<std::uint8_t>(width));
  prev = 0;
  first = true;
  for (std::uint64_t idx : kept) {
    const std::uint64_t d = first ? idx : idx - prev;
    for (std::uint32_t b = 0; b < width; ++b)
      w.u8(static_cast<std::uint8_t>(d >> (8 * b)));
    prev = idx;
    first = false;
  }
  return std::move(w.bytes);
}

std::vector<std::uint8_t> build_label_section(std::span<const std::uint32_t> labels,
                                              std::uint32_t k, LabelEncoding enc) {
  if (enc == LabelEncoding::FixedWidth) {
    const std::uint32_t width = fixed_label_width(k);
    BitWriter bw;
    for (std::uint32_t l : labels) bw.push(l, width);
    return std::move(bw.bytes);
  }
  const auto freq = core::class_histogram(labels, k);
  const HuffmanTable table = HuffmanTable::from_frequencies(freq);
  Writer w;
  for (std::uint8_t len : table.lengths()) w.u8(len);
  w.uint<std::uint64_t>(table.encoded_bits(freq));
  BitWriter bw;
  for (std::uint32_t l : labels) bw.push(table.code_of(l), table.length_of(l));
  w.raw(bw.bytes);
  return std::move(w.bytes);
}

struct Sections {
  std::vector<std::uint8_t> body;
  std::uint64_t mask_bytes = 0;
  std::uint64_t label_bytes = 0;
};

Sections build_body(const SelectionResult& sel,
                    std::span<const std::uint32_t> labels, std::uint32_t k,
                    MaskEncoding mask_enc, LabelEncoding label_enc) {
  if (labels.size() != sel.kept.size())
    throw ShapeMismatch("labels length " + std::to_string(labels.size()) +
                        " != kept count " + std::to_string(sel.kept.size()));
  if (k < 2) throw InvalidShape("k must be >= 2, got " + std::to_string(k));
  std::uint64_t prev = 0;
  bool first = true;
  for (std::uint64_t idx : sel.kept) {
    if (idx >= sel.n_ref)
      throw IndexOverflow("kept index " + std::to_string(idx) +
                          " >= n_ref=" + std::to_string(sel.n_ref));
    if (!first && idx <= prev)
      throw NonMonotoneIndices("kept indices must be strictly increasing");
    prev = idx;
    first = false;
  }
  for (std::uint32_t l : labels)
    if (l >= k)
      throw LabelOutOfRange("label " + std::to_string(l) +
                            " >= k=" + std::to_string(k));

  Writer w;
  w.uint<std::uint64_t>(sel.n_ref);
  w.uint<std::uint32_t>(k);
  w.uint<std::uint64_t>(sel.kept.size());
  w.u8(static_cast<std::uint8_t>(mask_enc));
  w.u8(static_cast<std::uint8_t>(label_enc));

  Sections s;
  auto mask = build_mask_section(sel.kept, sel.n_ref, mask_enc);
  auto label = build_label_section(labels, k, label_enc);
  s.mask_bytes = mask.size();
  s.label_bytes = label.size();
  w.raw(mask);
  w.raw(label);
  s.body = std::move(w.bytes);
  return s;
}

}  // namespace

SelectionResult Payload::selection() const {
  SelectionResult sel;
  sel.kept = kept;
  sel.n_ref = n_ref;
  sel.method = SelectionMethod::TopFraction;  // provenance is not transmitted
  sel.keep_ratio =
      n_ref == 0 ? 1.0 : static_cast<double>(kept.size()) / static_cast<double>(n_ref);
  return sel;
}

std::vector<std::uint8_t> encode(const SelectionResult& sel,
                                 std::span<const std::uint32_t> labels,
                                 std::uint32_t k, const EncodeOptions& opts) {
  Sections s = build_body(sel, labels, k, opts.mask, opts.label);

  Writer out;
  out.raw({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  out.u8(kVersion);
  out.u8(opts.zstd ? kFlagZstd : 0);
  if (opts.zstd) {
    auto frame = zstdwrap::compress(s.body);
    out.raw(frame);
  } else {
    out.raw(s.body);
  }
  return std::move(out.bytes);
}

Payload decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4)
    throw Truncated("PLP1: file ends at byte " + std::to_string(bytes.size()) +
                    ", magic needs 4");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw BadMagic("PLP1: bad magic at byte offset 0");
  if (bytes.size() < 6)
    throw Truncated("PLP1: header needs 6 bytes, file has " +
                    std::to_string(bytes.size()));
  if (bytes[4] != kVersion)
    throw UnsupportedVersion("PLP1: unknown version byte " +
                             std::to_string(bytes[4]));
  const std::uint8_t flags = bytes[5];
  if (flags & ~kFlagZstd)
    throw CanonicalViolation("PLP1: reserved flag bits set");

  Payload p;
  p.zstd_wrapped = (flags & kFlagZstd) != 0;

  std::vector<std::uint8_t> unwrapped;
  std::span<const std::uint8_t> body = bytes.subspan(6);
  if (p.zstd_wrapped) {
    unwrapped = zstdwrap::decompress(body);
    body = unwrapped;
  }

  Reader r{body};
  p.n_ref = r.uint<std::uint64_t>("n_ref");
  p.k = r.uint<std::uint32_t>("k");
  const std::uint64_t m = r.uint<std::uint64_t>("m");
  if (p.k < 2) throw InvalidShape("PLP1: k must be >= 2, got " + std::to_string(p.k));
  if (m > p.n_ref)
    throw IndexOverflow("PLP1: kept count " + std::to_string(m) +
                        " > n_ref=" + std::to_string(p.n_ref));

  const std::uint8_t mask_enc = r.u8("mask encoding");
  const std::uint8_t label_enc = r.u8("label encoding");
  if (mask_enc > 1)
    throw FormatError("PLP1: unknown mask encoding " + std::to_string(mask_enc));
  if (label_enc > 1)
    throw FormatError("PLP1: unknown label encoding " + std::to_string(label_enc));
  p.mask_encoding = static_cast<MaskEncoding>(mask_enc);
  p.label_encoding = static_cast<LabelEncoding>(label_enc);

  // Mask section.
  p.kept.reserve(std::min<std::uint64_t>(m, body.size() * 8));
  if (p.mask_encoding == MaskEncoding::Bitmap) {
    const std::uint64_t nbytes = p.n_ref / 8 + (p.n_ref % 8 != 0 ? 1 : 0);
    auto mask = r.raw(nbytes, "bitmap mask");
    for (std::uint64_t i = 0; i < nbytes; ++i) {
      std::uint8_t b = mask[i];
      while (b) {
        const int bit = std::countr_zero(b);
        const std::uint64_t idx = i * 8 + static_cast<std::uint64_t>(bit);
        if (idx >= p.n_ref)
          throw CanonicalViolation("PLP1: bitmap padding bit set at index " +
                                   std::to_string(idx));
        p.kept.push_back(idx);
        b = static_cast<std::uint8_t>(b & (b - 1));
      }
    }
    if (p.kept.size() != m)
      throw BitLengthMismatch("PLP1: bitmap holds " +
                              std::to_string(p.kept.size()) +
                              " set bits, header says " + std::to_string(m));
  } else {
    const std::uint32_t width = r.u8("delta width tag");
    if (width != 1 && width != 2 && width != 4 && width != 8)
      throw FormatError("PLP1: bad delta width tag " + std::to_string(width));
    if (m > (body.size() - r.pos) / width)
      throw Truncated("PLP1: delta stream needs " + std::to_string(m) + "x" +
                      std::to_string(width) + " bytes");
    auto data = r.raw(m * width, "delta stream");
    std::uint64_t prev = 0;
    std::uint64_t max_delta = 0;
    for (std::uint64_t i = 0; i < m; ++i) {
      std::uint64_t d = 0;
      for (std::uint32_t b = 0; b < width; ++b)
        d |= static_cast<std::uint64_t>(data[i * width + b]) << (8 * b);
      if (i > 0 && d == 0)
        throw NonMonotoneIndices("PLP1: zero delta at position " + std::to_string(i));
      const std::uint64_t idx = (i == 0) ? d : prev + d;
      if (idx < prev)
        throw IndexOverflow("PLP1: kept index overflows u64");
      if (idx >= p.n_ref)
        throw IndexOverflow("PLP1: kept index " + std::to_string(idx) +
                            " >= n_ref=" + std::to_string(p.n_ref));
      p.kept.push_back(idx);
      max_delta = std::max(max_delta, d);
      prev = idx;
    }
    if (width != delta_width(max_delta))
      throw CanonicalViolation("PLP1: delta width tag " + std::to_string(width) +
                               " is not minimal");
  }

  // Label section.
  p.labels.reserve(m);
  if (p.label_encoding == LabelEncoding::FixedWidth) {
    const std::uint32_t width = fixed_label_width(p.k);
    // The mask section already bounded m by the in-memory body size (one
    // byte per delta, or n_ref <= 8 * mask bytes), so m * width cannot wrap.
    const std::uint64_t bits = m * width;
    auto data = r.raw(bits / 8 + (bits % 8 != 0 ? 1 : 0), "fixed-width labels");
    BitReader br{data};
    for (std::uint64_t i = 0; i < m; ++i) {
      std::uint64_t v = 0;
      for (std::uint32_t b = 0; b < width; ++b)
        v = (v << 1) | static_cast<std::uint64_t>(br.next());
      if (v >= p.k)
        throw LabelOutOfRange("PLP1: label " + std::to_string(v) +
                              " >= k=" + std::to_string(p.k));
      p.labels.push_back(static_cast<std::uint32_t>(v));
    }
    check_padding_zero(data, bits, "fixed-width labels");
  } else {
    auto len_bytes = r.raw(p.k, "huffman code lengths");
    std::vector<std::uint8_t> lengths(len_bytes.begin(), len_bytes.end());
    const HuffmanTable table = HuffmanTable::from_lengths(std::move(lengths));
    const std::uint64_t bits = r.uint<std::uint64_t>("huffman bit length");
    auto data = r.raw(bits / 8 + (bits % 8 != 0 ? 1 : 0), "huffman stream");
    BitReader br{data};
    auto dec = table.decoder();
    while (p.labels.size() < m) {
      if (br.pos >= bits)
        throw BitLengthMismatch("PLP1: huffman stream exhausted after " +
                                std::to_string(p.labels.size()) + " of " +
                                std::to_string(m) + " labels");
      const std::int64_t sym = dec.push_bit(br.next());
      if (sym >= 0) p.labels.push_back(static_cast<std::uint32_t>(sym));
    }
    if (br.pos != bits)
      throw BitLengthMismatch("PLP1: huffman stream holds " +
                              std::to_string(bits) + " bits, labels use " +
                              std::to_string(br.pos));
    check_padding_zero(data, bits, "huffman stream");
    // The stored table must be the canonical one for these labels, otherwise
    // re-encoding could not be byte-identical.
    const auto freq = core::class_histogram(p.labels, p.k);
    if (HuffmanTable::from_frequencies(freq).lengths() != table.lengths())
      throw CanonicalViolation("PLP1: huffman table is not canonical for the payload");
  }

  if (r.pos != body.size())
    throw CanonicalViolation("PLP1: " + std::to_string(body.size() - r.pos) +
                             " trailing bytes after offset " + std::to_string(r.pos));
  return p;
}

RawSize raw_size_bits(double n_ref, double p, std::uint32_t k) {
  if (!(p > 0.0) || p > 1.0)
    throw InvalidKeepRatio("keep ratio must be in (0,1], got " + std::to_string(p));
  if (k < 2) throw InvalidShape("k must be >= 2, got " + std::to_string(k));
  RawSize r;
  r.mask_bits = n_ref;
  r.label_bits_ideal = n_ref * p * std::log2(static_cast<double>(k));
  r.label_bits_packed = n_ref * p * static_cast<double>(fixed_label_width(k));
  r.total_bits_ideal = r.mask_bits + r.label_bits_ideal;
  r.total_bits_packed = r.mask_bits + r.label_bits_packed;
  return r;
}

SizeGrid analyze(const SelectionResult& sel, std::span<const std::uint32_t> labels,
                 std::uint32_t k) {
  SizeGrid grid;
  for (MaskEncoding mask : {MaskEncoding::Bitmap, MaskEncoding::DeltaIndex}) {
    for (LabelEncoding label : {LabelEncoding::FixedWidth, LabelEncoding::Huffman}) {
      Sections s = build_body(sel, labels, k, mask, label);
      for (bool zstd : {false, true}) {
        SizeGrid::Measured row;
        row.mask = mask;
        row.label = label;
        row.zstd = zstd;
        row.mask_section_bytes = s.mask_bytes;
        row.label_section_bytes = s.label_bytes;
        row.container_bytes =
            6 + (zstd ? zstdwrap::compress(s.body).size() : s.body.size());
        grid.measured.push_back(row);
      }
    }
  }
  const double p = sel.n_ref == 0
                       ? 1.0
                       : static_cast<double>(std::max<std::uint64_t>(
                             sel.kept.size(), 1)) /
                             static_cast<double>(sel.n_ref);
  grid.analytic = raw_size_bits(static_cast<double>(sel.n_ref), std::min(p, 1.0), k);
  if (sel.kept.size() == sel.n_ref) {
    RawSize lo = grid.analytic;
    lo.mask_bits = 0;
    lo.total_bits_ideal = lo.label_bits_ideal;
    lo.total_bits_packed = lo.label_bits_packed;
    grid.labels_only = lo;
  }
  return grid;
}

void write_size_grid_csv(std::ostream& os, const SizeGrid& grid) {
  os << "kind,mask_encoding,label_encoding,zstd,mask_section_bytes,"
        "label_section_bytes,container_bytes\n";
  for (const auto& row : grid.measured) {
    os << "measured," << (row.mask == MaskEncoding::Bitmap ? "bitmap" : "delta")
       << ',' << (row.label == LabelEncoding::FixedWidth ? "fixed" : "huffman")
       << ',' << (row.zstd ? "on" : "off") << ',' << row.mask_section_bytes << ','
       << row.label_section_bytes << ',' << row.container_bytes << '\n';
  }
  auto analytic_row = [&os](const char* kind, const char* label_kind,
                            double mask_bits, double label_bits, double total_bits) {
    os << kind << ",bitmap," << label_kind << ",off," << mask_bits / 8.0 << ','
       << label_bits / 8.0 << ',' << total_bits / 8.0 << '\n';
  };
  analytic_row("analytic_ideal", "entropy", grid.analytic.mask_bits,
               grid.analytic.label_bits_ideal, grid.analytic.total_bits_ideal);
  analytic_row("analytic_packed", "fixed", grid.analytic.mask_bits,
               grid.analytic.label_bits_packed, grid.analytic.total_bits_packed);
  if (grid.labels_only) {
    analytic_row("analytic_labels_only_ideal", "entropy", 0.0,
                 grid.labels_only->label_bits_ideal,
                 grid.labels_only->total_bits_ideal);
    analytic_row("analytic_labels_only_packed", "fixed", 0.0,
                 grid.labels_only->label_bits_packed,
                 grid.labels_only->total_bits_packed);
  }
}

}  // namespace plada::codec
