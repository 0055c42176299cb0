#include "prnn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "prnn/errors.hpp"

namespace prnn {

namespace {

double evaluate(const ScalarFn& f, const ParameterStore& store) {
  Tape tape;
  const Var out = f(tape, store);
  if (out.value().size() != 1) throw DimensionError("grad_check: function is not scalar");
  return out.value()[0];
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const ParameterStore& point,
                           const GradCheckOptions& options) {
  Gradients analytic;
  {
    Tape tape;
    const Var out = f(tape, point);
    tape.backward(out);
    analytic = tape.parameter_gradients();
  }

  GradCheckResult result;
  ParameterStore probe = point;
  for (const auto& name : point.names()) {
    const Tensor& base = point.get(name);
    auto it = analytic.find(name);
    const std::size_t n = base.size();
    std::size_t stride = 1;
    if (options.max_coords_per_param > 0 && n > options.max_coords_per_param) {
      stride = (n + options.max_coords_per_param - 1) / options.max_coords_per_param;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      Tensor& w = probe.get_mut(name);
      const double orig = w[i];
      w[i] = orig + options.h;
      const double fp = evaluate(f, probe);
      w[i] = orig - options.h;
      const double fm = evaluate(f, probe);
      w[i] = orig;
      const double num = (fp - fm) / (2.0 * options.h);
      const double ana = it == analytic.end() ? 0.0 : it->second[i];
      const double denom = std::max({std::abs(ana), std::abs(num), options.floor});
      const double rel = std::abs(ana - num) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        if (rel >= result.max_rel_error) {
          result.worst_param = name;
          result.worst_index = i;
          result.analytic = ana;
          result.numeric = num;
        }
      }
    }
  }
  return result;
}

}  // namespace prnn
