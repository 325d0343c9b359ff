#include "plada/logit_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace plada::core {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'G', '1'};

static_assert(std::endian::native == std::endian::little,
              "PLG1 I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

LogitMatrix read_logits(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  if (bytes.size() < 4)
    throw Truncated("PLG1: file ends at byte " + std::to_string(bytes.size()) +
                    ", magic needs 4");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw BadMagic("PLG1: bad magic at byte offset 0");
  if (bytes.size() < 16)
    throw Truncated("PLG1: file ends at byte " + std::to_string(bytes.size()) +
                    ", header needs 16");

  std::uint64_t n = 0;
  std::uint32_t k = 0;
  std::memcpy(&n, bytes.data() + 4, 8);
  std::memcpy(&k, bytes.data() + 12, 4);
  if (n < 1 || k < 2)
    throw InvalidShape("PLG1: header declares n=" + std::to_string(n) +
                       " k=" + std::to_string(k));

  const std::uint64_t count = n * static_cast<std::uint64_t>(k);
  const std::uint64_t need = 16 + count * 4;
  if (bytes.size() < need)
    throw Truncated("PLG1: file ends at byte " + std::to_string(bytes.size()) +
                    ", payload needs " + std::to_string(need));
  if (bytes.size() > need)
    throw Truncated("PLG1: trailing bytes after offset " + std::to_string(need));

  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 16 + i * 4, 4);
    if (!std::isfinite(f))
      throw NonFiniteValue("PLG1: non-finite value at byte offset " +
                           std::to_string(16 + i * 4));
    values[i] = static_cast<double>(f);
  }
  return LogitMatrix(n, k, std::move(values));
}

void write_logits(const LogitMatrix& m, const std::filesystem::path& path) {
  std::string out;
  out.reserve(16 + m.rows() * m.cols() * 4);
  out.append(kMagic, 4);
  put(out, static_cast<std::uint64_t>(m.rows()));
  put(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.matrix().data) put(out, static_cast<float>(v));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<std::uint64_t> class_histogram(std::span<const std::uint32_t> labels,
                                           std::uint32_t k) {
  std::vector<std::uint64_t> counts(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k)
      throw LabelOutOfRange("label " + std::to_string(labels[i]) + " at row " +
                            std::to_string(i) + " >= k=" + std::to_string(k));
    ++counts[labels[i]];
  }
  return counts;
}

}  // namespace plada::core
