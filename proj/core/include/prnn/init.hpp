#pragma once

#include <cstdint>
#include <string>

#include "prnn/tensor.hpp"

namespace prnn {

/// Glorot bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

/// Uniform in +-glorot_bound. The draw stream is keyed by (seed, name), so a
/// tensor's values do not depend on which other tensors exist.
Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                      std::uint64_t seed, const std::string& name);

}  // namespace prnn
