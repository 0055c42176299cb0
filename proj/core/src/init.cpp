#include "prnn/init.hpp"

#include <cmath>

#include "prnn/rng.hpp"

namespace prnn {

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                      std::uint64_t seed, const std::string& name) {
  const double bound = glorot_bound(fan_in, fan_out);
  CounterRng rng(hash_seed(seed, name));
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace prnn
