#include "plada/huffman.hpp"

#include <algorithm>
#include <queue>

namespace plada::codec {

namespace {

struct Node {
  std::uint64_t weight;
  std::uint32_t min_symbol;  // smallest symbol id contained in the subtree
  std::int32_t left = -1;    // indices into the node arena, -1 = leaf
  std::int32_t right = -1;
  std::uint32_t symbol = 0;  // valid for leaves
};

struct HeapOrder {
  const std::vector<Node>* arena;
  bool operator()(std::int32_t a, std::int32_t b) const {
    const Node& na = (*arena)[a];
    const Node& nb = (*arena)[b];
    if (na.weight != nb.weight) return na.weight > nb.weight;
    return na.min_symbol > nb.min_symbol;
  }
};

void collect_depths(const std::vector<Node>& arena, std::int32_t at,
                    std::uint32_t depth, std::vector<std::uint8_t>& lengths) {
  const Node& n = arena[at];
  if (n.left < 0) {
    lengths[n.symbol] = static_cast<std::uint8_t>(depth);
    return;
  }
  collect_depths(arena, n.left, depth + 1, lengths);
  collect_depths(arena, n.right, depth + 1, lengths);
}

}  // namespace

HuffmanTable HuffmanTable::from_frequencies(std::span<const std::uint64_t> freq) {
  std::vector<std::uint8_t> lengths(freq.size(), 0);

  std::vector<Node> arena;
  arena.reserve(2 * freq.size() + 1);
  std::priority_queue<std::int32_t, std::vector<std::int32_t>, HeapOrder> heap(
      HeapOrder{&arena});
  for (std::uint32_t s = 0; s < freq.size(); ++s) {
    if (freq[s] == 0) continue;
    arena.push_back(Node{freq[s], s, -1, -1, s});
    heap.push(static_cast<std::int32_t>(arena.size() - 1));
  }

  if (!arena.empty()) {
    if (heap.size() == 1) {
      lengths[arena[0].symbol] = 1;  // degenerate alphabet keeps a real code
    } else {
      while (heap.size() > 1) {
        std::int32_t a = heap.top();
        heap.pop();
        std::int32_t b = heap.top();
        heap.pop();
        Node merged{arena[a].weight + arena[b].weight,
                    std::min(arena[a].min_symbol, arena[b].min_symbol), a, b, 0};
        arena.push_back(merged);
        heap.push(static_cast<std::int32_t>(arena.size() - 1));
      }
      collect_depths(arena, heap.top(), 0, lengths);
    }
  }
  return from_lengths(std::move(lengths));
}

HuffmanTable HuffmanTable::from_lengths(std::vector<std::uint8_t> lengths) {
  HuffmanTable t;
  t.lengths_ = std::move(lengths);
  t.assign_canonical_codes();
  return t;
}

void HuffmanTable::assign_canonical_codes() {
  const std::size_t k = lengths_.size();
  codes_.assign(k, 0);
  max_len_ = 0;
  unsigned __int128 kraft = 0;  // scaled by 2^64
  for (std::uint8_t len : lengths_) {
    if (len > 64) throw KraftViolation("code length " + std::to_string(len) + " > 64");
    if (len > 0) kraft += static_cast<unsigned __int128>(1) << (64 - len);
    max_len_ = std::max(max_len_, len);
  }
  if (kraft > (static_cast<unsigned __int128>(1) << 64))
    throw KraftViolation("code lengths violate the Kraft inequality");

  count_.assign(max_len_ + 1, 0);
  first_code_.assign(max_len_ + 1, 0);
  first_index_.assign(max_len_ + 1, 0);
  sorted_.clear();
  for (std::uint8_t len : lengths_)
    if (len > 0) ++count_[len];

  std::uint64_t code = 0;
  std::uint32_t index = 0;
  for (std::uint32_t len = 1; len <= max_len_; ++len) {
    code <<= 1;
    first_code_[len] = code;
    first_index_[len] = index;
    code += count_[len];
    index += count_[len];
  }
  // Codes in (length, symbol id) order; the ascending symbol scan fills each
  // length bucket in id order.
  sorted_.resize(index);
  std::vector<std::uint32_t> next(first_index_);
  for (std::uint32_t s = 0; s < k; ++s) {
    const std::uint8_t len = lengths_[s];
    if (len == 0) continue;
    const std::uint32_t pos = next[len]++;
    sorted_[pos] = s;
    codes_[s] = first_code_[len] + (pos - first_index_[len]);
  }
}

std::uint64_t HuffmanTable::encoded_bits(std::span<const std::uint64_t> freq) const {
  std::uint64_t bits = 0;
  for (std::size_t s = 0; s < freq.size(); ++s)
    bits += freq[s] * lengths_[s];
  return bits;
}

HuffmanTable::Decoder HuffmanTable::decoder() const {
  Decoder d;
  d.table_ = this;
  return d;
}

std::int64_t HuffmanTable::Decoder::push_bit(int bit) {
  code_ = (code_ << 1) | static_cast<std::uint64_t>(bit);
  ++len_;
  if (len_ > table_->max_len_)
    throw BitLengthMismatch("bit sequence is not a codeword");
  if (table_->count_[len_] > 0) {
    const std::uint64_t first = table_->first_code_[len_];
    if (code_ >= first && code_ - first < table_->count_[len_]) {
      const std::uint32_t sym =
          table_->sorted_[table_->first_index_[len_] + (code_ - first)];
      code_ = 0;
      len_ = 0;
      return sym;
    }
  }
  return -1;
}

}  // namespace plada::codec
