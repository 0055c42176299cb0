#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "prnn/params.hpp"
#include "prnn/tensor.hpp"

namespace prnn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a primitive's backward closure sees. grads[i] is null when input i
/// does not require a gradient, so the closure can skip that work.
struct BackwardArgs {
  const Tensor& output;
  const Tensor& grad_output;
  std::span<const Tensor* const> inputs;
  std::span<Tensor* const> grads;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

/// Linear record of primitive ops for reverse-mode differentiation.
/// Nodes are appended in execution order; backward() replays them in exact
/// reverse and accumulates input gradients in that order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Differentiable leaf not tied to a parameter store.
  Var variable(Tensor value);
  /// Leaf bound to store[name]. Repeated calls with the same name return the same node.
  Var parameter(const ParameterStore& store, const std::string& name);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1; root must hold exactly one element.
  void backward(const Var& root);

  const Tensor& value(const Var& v) const;
  /// Gradient of the last backward root wrt v; zeros if v was not reached.
  Tensor grad(const Var& v) const;
  bool requires_grad(const Var& v) const;

  /// Adds every parameter leaf's gradient into into[name].
  void accumulate_parameter_grads(Gradients& into) const;
  Gradients parameter_gradients() const;

  std::size_t size() const { return nodes_.size(); }
  /// Node ids whose backward closures ran during the last backward(), in call order.
  const std::vector<std::size_t>& last_backward_order() const { return backward_order_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::string param_name;
  };

  Var push(Node node);
  Var record_impl(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  // deque keeps references returned by Var::value() valid as the tape grows
  std::deque<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> params_;
  std::vector<std::size_t> backward_order_;
};

}  // namespace prnn
