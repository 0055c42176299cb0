#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "prnn/autodiff.hpp"
#include "prnn/params.hpp"

namespace prnn {

/// Builds a scalar loss on the tape from the given parameter values.
using ScalarFn = std::function<Var(Tape&, const ParameterStore&)>;

struct GradCheckOptions {
  double h = 1e-6;
  /// Denominator floor for the per-coordinate relative error
  /// |a - n| / max(|a|, |n|, floor). Central differences of an O(1) loss
  /// carry roundoff near eps * |f| / h, about 1e-10 at h = 1e-6, so
  /// coordinates smaller than the floor are effectively held to an absolute
  /// tolerance of floor times the relative bound.
  double floor = 1e-4;
  /// 0 checks every coordinate; otherwise at most this many per parameter,
  /// chosen at a fixed stride.
  std::size_t max_coords_per_param = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// Compares tape gradients against central differences (f(x+h) - f(x-h)) / 2h.
GradCheckResult grad_check(const ScalarFn& f, const ParameterStore& point,
                           const GradCheckOptions& options = {});

}  // namespace prnn
