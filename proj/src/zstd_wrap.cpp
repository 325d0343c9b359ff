#include "plada/zstd_wrap.hpp"

#include "plada/types.hpp"

// The build environment ships the zstd runtime library without its
// development header, so the stable public entry points are declared here.
extern "C" {
size_t ZSTD_compress(void* dst, size_t dst_capacity, const void* src,
                     size_t src_size, int level);
size_t ZSTD_decompress(void* dst, size_t dst_capacity, const void* src,
                       size_t src_size);
size_t ZSTD_compressBound(size_t src_size);
unsigned ZSTD_isError(size_t code);
unsigned long long ZSTD_getFrameContentSize(const void* src, size_t src_size);
}

namespace plada::zstdwrap {

namespace {
constexpr unsigned long long kContentSizeUnknown = ~0ULL;      // -1
constexpr unsigned long long kContentSizeError = ~0ULL - 1;    // -2
constexpr unsigned long long kMaxBodySize = 1ULL << 33;
}  // namespace

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> body, int level) {
  std::vector<std::uint8_t> out(ZSTD_compressBound(body.size()));
  const size_t n =
      ZSTD_compress(out.data(), out.size(), body.data(), body.size(), level);
  if (ZSTD_isError(n)) throw Error("zstd compression failed");
  out.resize(n);
  return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> frame) {
  const unsigned long long content =
      ZSTD_getFrameContentSize(frame.data(), frame.size());
  if (content == kContentSizeError || content == kContentSizeUnknown)
    throw Truncated("zstd: malformed frame header");
  if (content > kMaxBodySize)
    throw Truncated("zstd: implausible declared body size " +
                    std::to_string(content));
  std::vector<std::uint8_t> out(content);
  const size_t n =
      ZSTD_decompress(out.data(), out.size(), frame.data(), frame.size());
  if (ZSTD_isError(n) || n != content)
    throw Truncated("zstd: frame does not decode to the declared size");
  return out;
}

}  // namespace plada::zstdwrap
