#pragma once

#include <filesystem>
#include <iosfwd>

#include "prnn/tensor.hpp"

namespace prnn {

// On-disk tensor layout:
//   "PTNS" | u8 version (=1) | u8 rank | rank x u32 LE dims | fp64 LE payload
inline constexpr char kTensorMagic[4] = {'P', 'T', 'N', 'S'};
inline constexpr unsigned char kTensorVersion = 1;

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace prnn
