#include "lbpwht/tensor_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "lbpwht/errors.hpp"

namespace lbpwht {

namespace {

constexpr char kMagic[4] = {'L', 'B', 'P', 'W'};
constexpr std::uint32_t kVersion = 1;
// rows*cols cap; keeps payload size arithmetic far from overflow.
constexpr std::uint64_t kMaxElements = 1ull << 31;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b;
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw FormatError("tensor load: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32_from(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_tensor(const Matrix& m, std::ostream& out) {
  if (m.rows() < 1 || m.cols() < 1) throw ShapeError("tensor save: rows and cols must be >= 1");
  if (m.rows() > static_cast<Index>(std::numeric_limits<std::uint32_t>::max()) ||
      m.cols() > static_cast<Index>(std::numeric_limits<std::uint32_t>::max())) {
    throw FormatError("tensor save: dimension exceeds format limit");
  }
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f32(out, static_cast<float>(m(i, j)));
  if (!out) throw FormatError("tensor save: write failed");
}

void save_tensor(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("tensor save: cannot open " + path.string());
  save_tensor(m, f);
}

Matrix load_tensor(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("tensor load: bad magic (not an LBPW file)");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw FormatError("tensor load: unsupported version");
  const std::uint64_t rows = get_u32(in);
  const std::uint64_t cols = get_u32(in);
  if (rows < 1 || cols < 1) throw FormatError("tensor load: rows and cols must be >= 1");
  if (rows * cols > kMaxElements) throw FormatError("tensor load: dimension overflow");

  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<unsigned char> buf(4 * cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw FormatError("tensor load: truncated payload");
    for (std::uint64_t j = 0; j < cols; ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) =
          static_cast<double>(get_f32_from(buf.data() + 4 * j));
    }
  }
  return m;
}

Matrix load_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("tensor load: cannot open " + path.string());
  return load_tensor(f);
}

}  // namespace lbpwht
