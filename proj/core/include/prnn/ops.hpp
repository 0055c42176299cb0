#pragma once

#include <span>
#include <vector>

#include "prnn/autodiff.hpp"
#include "prnn/tensor.hpp"

// Differentiable primitives. Each records one node on the tape of its inputs.
namespace prnn::ops {

inline constexpr double kLogClip = 1e-12;
inline constexpr double kSimplexTolerance = 1e-9;

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var sum(const Var& a);
Var square(const Var& a);

/// a[m x k] * b[k x n].
Var matmul(const Var& a, const Var& b);
/// w[m x n] * x[n] -> [m].
Var matvec(const Var& w, const Var& x);
/// w * x + b for vector x.
Var affine(const Var& w, const Var& x, const Var& b);

/// 3x3 stride-1 convolution, zero padding 1. input [H x W x Cin], kernels
/// [3 x 3 x Cin x Cout], bias [Cout] -> [H x W x Cout].
Var conv2d_same(const Var& input, const Var& kernels, const Var& bias);
/// 2x2 stride-2 max pooling over [H x W x C]; odd edges padded with -inf.
/// Ties resolve to the row-major earliest element.
Var maxpool2(const Var& input);

Var relu(const Var& a);
Var tanh_act(const Var& a);
Var sigmoid_act(const Var& a);

/// Softmax over a 1-D tensor with max subtraction.
Var softmax(const Var& logits);
/// -sum_k target_k * log(max(predicted_k, 1e-12)). Both must be on the simplex.
Var cross_entropy(const Tensor& target, const Var& predicted);

Var reshape(const Var& a, Shape shape);
/// Concatenates 1-D tensors.
Var concat(const std::vector<Var>& parts);

// Value-only helpers shared with non-tape code paths.
Tensor softmax(const Tensor& logits);
double cross_entropy(const Tensor& target, const Tensor& predicted);
void require_simplex(const Tensor& p, const char* what);

}  // namespace prnn::ops
