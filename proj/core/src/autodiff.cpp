#include "prnn/autodiff.hpp"

#include <algorithm>

#include "prnn/errors.hpp"

namespace prnn {

const Tensor& Var::value() const {
  if (!tape_) throw ValidationError("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(const ParameterStore& store, const std::string& name) {
  for (const auto& [pname, id] : params_) {
    if (pname == name) return Var(this, id);
  }
  Node n;
  n.value = store.get(name);
  n.requires_grad = true;
  n.param_name = name;
  Var v = push(std::move(n));
  params_.emplace_back(name, v.id());
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record_impl(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                     std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  return record_impl(std::move(value), std::span<const Var>(inputs), std::move(backward));
}

Var Tape::record_impl(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw ValidationError("op mixes Vars from different tapes");
    n.inputs.push_back(in.id_);
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(const Var& v) const { return nodes_.at(v.id_).value; }

bool Tape::requires_grad(const Var& v) const { return nodes_.at(v.id_).requires_grad; }

Tensor Tape::grad(const Var& v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.grad.empty()) return Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(const Var& root) {
  if (root.tape_ != this) throw ValidationError("backward root belongs to another tape");
  if (nodes_[root.id_].value.size() != 1) {
    throw DimensionError("backward root must be a scalar, got " +
                         shape_to_string(nodes_[root.id_].value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  backward_order_.clear();
  nodes_[root.id_].grad = Tensor(nodes_[root.id_].value.shape(), 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = root.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (auto in : n.inputs) {
      Node& src = nodes_[in];
      in_values.push_back(&src.value);
      if (src.requires_grad) {
        if (src.grad.empty()) src.grad = Tensor::zeros_like(src.value);
        in_grads.push_back(&src.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    n.backward(BackwardArgs{n.value, n.grad, in_values, in_grads});
    backward_order_.push_back(id);
  }
}

void Tape::accumulate_parameter_grads(Gradients& into) const {
  for (const auto& [name, id] : params_) {
    const Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, n.grad);
      continue;
    }
    require_same_shape(it->second, n.grad, "accumulate_parameter_grads");
    for (std::size_t i = 0; i < n.grad.size(); ++i) it->second[i] += n.grad[i];
  }
}

Gradients Tape::parameter_gradients() const {
  Gradients g;
  for (const auto& [name, id] : params_) {
    const Node& n = nodes_[id];
    g.emplace(name, n.grad.empty() ? Tensor::zeros_like(n.value) : n.grad);
  }
  return g;
}

}  // namespace prnn
