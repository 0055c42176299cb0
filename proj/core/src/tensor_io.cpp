#include "prnn/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "prnn/errors.hpp"

namespace prnn {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), 8);
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw IoError("truncated tensor stream");
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  read_exact(in, reinterpret_cast<char*>(b.data()), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  if (t.rank() > std::numeric_limits<unsigned char>::max()) {
    throw DimensionError("tensor rank too large to serialize");
  }
  out.write(kTensorMagic, 4);
  out.put(static_cast<char>(kTensorVersion));
  out.put(static_cast<char>(t.rank()));
  for (auto d : t.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw DimensionError("dimension exceeds u32 in " + shape_to_string(t.shape()));
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (double v : t.data()) put_f64(out, v);
  if (!out) throw IoError("failed writing tensor");
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4);
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw IoError("bad tensor magic");
  char header[2];
  read_exact(in, header, 2);
  if (static_cast<unsigned char>(header[0]) != kTensorVersion) {
    throw IoError("unsupported tensor version " +
                  std::to_string(static_cast<unsigned char>(header[0])));
  }
  const auto rank = static_cast<unsigned char>(header[1]);
  if (rank == 0) throw IoError("tensor rank 0 is not representable");
  Shape shape(rank);
  for (auto& d : shape) d = get_u32(in);
  const auto n = shape_numel(shape);
  std::vector<unsigned char> raw(n * 8);
  read_exact(in, reinterpret_cast<char*>(raw.data()), raw.size());
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(raw[8 * i + k]) << (8 * k);
    data[i] = std::bit_cast<double>(v);
  }
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const DimensionError& e) {
    throw IoError(std::string("invalid tensor header: ") + e.what());
  }
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace prnn
