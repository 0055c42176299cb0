#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prnn/tensor.hpp"

namespace prnn {

/// Gradients keyed by parameter path. std::map keeps iteration order fixed.
using Gradients = std::map<std::string, Tensor, std::less<>>;

struct AdamState {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Named trainable tensors plus their optimizer state.
class ParameterStore {
 public:
  /// Throws ValidationError if the name is already registered.
  void add(std::string name, Tensor value);
  /// Replaces the value of an existing parameter; shapes must agree.
  void assign(std::string_view name, Tensor value);
  void remove(std::string_view name);

  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get_mut(std::string_view name);
  const AdamState& adam(std::string_view name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t num_values() const;

  Gradients zero_gradients() const;
  void reset_optimizer();

  /// One "<name>.ptns" file per parameter inside dir.
  void save(const std::filesystem::path& dir) const;
  static ParameterStore load(const std::filesystem::path& dir);

  /// Values equal (optimizer state ignored).
  bool same_values(const ParameterStore& other) const;

 private:
  friend void adam_step(ParameterStore&, const Gradients&, double, const AdamConfig&);

  struct Entry {
    Tensor value;
    AdamState adam;
  };
  const Entry& entry(std::string_view name) const;
  Entry& entry(std::string_view name);

  std::map<std::string, Entry, std::less<>> entries_;
};

/// Bias-corrected Adam update over every parameter in the store.
/// Every store key must be present in grads (extra gradient keys are an error too).
void adam_step(ParameterStore& store, const Gradients& grads, double lr,
               const AdamConfig& config = {});

/// dst += src for every key of src; dst must already hold each key.
void accumulate(Gradients& dst, const Gradients& src);

}  // namespace prnn
