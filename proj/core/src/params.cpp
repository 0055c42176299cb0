#include "prnn/params.hpp"

#include <algorithm>
#include <cmath>

#include "prnn/errors.hpp"
#include "prnn/tensor_io.hpp"

namespace prnn {

void ParameterStore::add(std::string name, Tensor value) {
  if (entries_.contains(name)) throw ValidationError("parameter registered twice: " + name);
  Entry e;
  e.adam.m = Tensor::zeros_like(value);
  e.adam.v = Tensor::zeros_like(value);
  e.value = std::move(value);
  entries_.emplace(std::move(name), std::move(e));
}

void ParameterStore::assign(std::string_view name, Tensor value) {
  auto& e = entry(name);
  if (e.value.shape() != value.shape()) {
    throw DimensionError("parameter " + std::string(name) + ": stored " +
                         shape_to_string(e.value.shape()) + " vs assigned " +
                         shape_to_string(value.shape()));
  }
  e.value = std::move(value);
}

void ParameterStore::remove(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter " + std::string(name));
  entries_.erase(it);
}

bool ParameterStore::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

const ParameterStore::Entry& ParameterStore::entry(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter " + std::string(name));
  return it->second;
}

ParameterStore::Entry& ParameterStore::entry(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter " + std::string(name));
  return it->second;
}

const Tensor& ParameterStore::get(std::string_view name) const { return entry(name).value; }
Tensor& ParameterStore::get_mut(std::string_view name) { return entry(name).value; }
const AdamState& ParameterStore::adam(std::string_view name) const { return entry(name).adam; }

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::num_values() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

Gradients ParameterStore::zero_gradients() const {
  Gradients g;
  for (const auto& [name, e] : entries_) g.emplace(name, Tensor::zeros_like(e.value));
  return g;
}

void ParameterStore::reset_optimizer() {
  for (auto& [_, e] : entries_) {
    e.adam.m.fill(0.0);
    e.adam.v.fill(0.0);
    e.adam.t = 0;
  }
}

void ParameterStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, e] : entries_) save_tensor(dir / (name + ".ptns"), e.value);
}

ParameterStore ParameterStore::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("parameter directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(dir)) {
    if (de.is_regular_file() && de.path().extension() == ".ptns") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  ParameterStore store;
  for (const auto& f : files) store.add(f.stem().string(), load_tensor(f));
  return store;
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

void adam_step(ParameterStore& store, const Gradients& grads, double lr,
               const AdamConfig& config) {
  if (grads.size() != store.size()) {
    for (const auto& [name, _] : grads) {
      if (!store.contains(name)) throw ValidationError("gradient for unknown parameter " + name);
    }
  }
  // Validate everything before mutating anything.
  for (const auto& name : store.names()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ValidationError("missing gradient for parameter " + name);
    require_same_shape(store.get(name), it->second, "adam_step");
  }
  for (const auto& name : store.names()) {
    const Tensor& g = grads.find(name)->second;
    Tensor& w = store.get_mut(name);
    auto& st = store.entry(name).adam;
    st.t += 1;
    const double t = static_cast<double>(st.t);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < w.size(); ++i) {
      st.m[i] = config.beta1 * st.m[i] + (1.0 - config.beta1) * g[i];
      st.v[i] = config.beta2 * st.v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = st.m[i] / c1;
      const double v_hat = st.v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void accumulate(Gradients& dst, const Gradients& src) {
  for (const auto& [name, g] : src) {
    auto it = dst.find(name);
    if (it == dst.end()) throw ValidationError("accumulate: unknown gradient key " + name);
    require_same_shape(it->second, g, "accumulate");
    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
  }
}

}  // namespace prnn
