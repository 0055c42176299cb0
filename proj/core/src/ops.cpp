#include "prnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "prnn/errors.hpp"

namespace prnn::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_to_string(t.shape()));
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record(std::move(out), {a, b}, [](const BackwardArgs& ctx) {
    for (int k = 0; k < 2; ++k) {
      if (Tensor* g = ctx.grads[k]) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += ctx.grad_output[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b}, [](const BackwardArgs& ctx) {
    if (Tensor* g = ctx.grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += ctx.grad_output[i];
    }
    if (Tensor* g = ctx.grads[1]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= ctx.grad_output[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b}, [](const BackwardArgs& ctx) {
    const Tensor& av = *ctx.inputs[0];
    const Tensor& bv = *ctx.inputs[1];
    if (Tensor* g = ctx.grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += ctx.grad_output[i] * bv[i];
    }
    if (Tensor* g = ctx.grads[1]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += ctx.grad_output[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= s;
  return a.tape().record(std::move(out), {a}, [s](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * ctx.grad_output[i];
  });
}

Var sum(const Var& a) {
  return a.tape().record(Tensor::scalar(a.value().sum()), {a}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    const double go = ctx.grad_output[0];
    for (auto& v : g.data()) v += go;
  });
}

Var square(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= v;
  return a.tape().record(std::move(out), {a}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    const Tensor& x = *ctx.inputs[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * x[i] * ctx.grad_output[i];
  });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul lhs");
  require_rank(bv, 2, "matmul rhs");
  if (av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(av.shape()) +
                         " x " + shape_to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return a.tape().record(std::move(out), {a, b}, [m, k, n](const BackwardArgs& ctx) {
    const Tensor& av = *ctx.inputs[0];
    const Tensor& bv = *ctx.inputs[1];
    const Tensor& go = ctx.grad_output;
    if (Tensor* ga = ctx.grads[0]) {
      // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * bv[p * n + j];
          (*ga)[i * k + p] += s;
        }
      }
    }
    if (Tensor* gb = ctx.grads[1]) {
      // dB = A^T * dC
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += aip * go[i * n + j];
        }
      }
    }
  });
}

Var matvec(const Var& w, const Var& x) {
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  require_rank(wv, 2, "matvec matrix");
  require_rank(xv, 1, "matvec vector");
  if (wv.dim(1) != xv.dim(0)) {
    throw DimensionError("matvec: " + shape_to_string(wv.shape()) + " x " +
                         shape_to_string(xv.shape()));
  }
  const std::size_t m = wv.dim(0), n = wv.dim(1);
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &wv[i * n];
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * xv[j];
    out[i] = s;
  }
  return w.tape().record(std::move(out), {w, x}, [m, n](const BackwardArgs& ctx) {
    const Tensor& wv = *ctx.inputs[0];
    const Tensor& xv = *ctx.inputs[1];
    const Tensor& go = ctx.grad_output;
    if (Tensor* gw = ctx.grads[0]) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = go[i];
        double* row = &(*gw)[i * n];
        for (std::size_t j = 0; j < n; ++j) row[j] += gi * xv[j];
      }
    }
    if (Tensor* gx = ctx.grads[1]) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = go[i];
        const double* row = &wv[i * n];
        for (std::size_t j = 0; j < n; ++j) (*gx)[j] += gi * row[j];
      }
    }
  });
}

Var affine(const Var& w, const Var& x, const Var& b) { return add(matvec(w, x), b); }

Var conv2d_same(const Var& input, const Var& kernels, const Var& bias) {
  const Tensor& in = input.value();
  const Tensor& k = kernels.value();
  const Tensor& b = bias.value();
  require_rank(in, 3, "conv2d_same input");
  require_rank(k, 4, "conv2d_same kernels");
  require_rank(b, 1, "conv2d_same bias");
  if (k.dim(0) != 3 || k.dim(1) != 3) {
    throw DimensionError("conv2d_same: kernels must be 3x3, got " + shape_to_string(k.shape()));
  }
  if (k.dim(2) != in.dim(2)) {
    throw DimensionError("conv2d_same: input channels " + shape_to_string(in.shape()) +
                         " do not match kernels " + shape_to_string(k.shape()));
  }
  if (b.dim(0) != k.dim(3)) {
    throw DimensionError("conv2d_same: bias " + shape_to_string(b.shape()) +
                         " does not match kernels " + shape_to_string(k.shape()));
  }
  const std::size_t h = in.dim(0), w = in.dim(1), cin = in.dim(2), cout = k.dim(3);
  Tensor out({h, w, cout});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* o = &out[(y * w + x) * cout];
      for (std::size_t co = 0; co < cout; ++co) o[co] = b[co];
      for (std::size_t dy = 0; dy < 3; ++dy) {
        const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + dy) - 1;
        if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t dx = 0; dx < 3; ++dx) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + dx) - 1;
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
          const double* ip = &in[(static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * cin];
          const double* kp = &k[(dy * 3 + dx) * cin * cout];
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = ip[ci];
            const double* krow = kp + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) o[co] += v * krow[co];
          }
        }
      }
    }
  }
  return input.tape().record(
      std::move(out), {input, kernels, bias}, [h, w, cin, cout](const BackwardArgs& ctx) {
        const Tensor& in = *ctx.inputs[0];
        const Tensor& k = *ctx.inputs[1];
        const Tensor& go = ctx.grad_output;
        Tensor* gin = ctx.grads[0];
        Tensor* gk = ctx.grads[1];
        if (Tensor* gb = ctx.grads[2]) {
          for (std::size_t p = 0; p < h * w; ++p) {
            for (std::size_t co = 0; co < cout; ++co) (*gb)[co] += go[p * cout + co];
          }
        }
        if (!gin && !gk) return;
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            const double* g = &go[(y * w + x) * cout];
            for (std::size_t dy = 0; dy < 3; ++dy) {
              const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + dy) - 1;
              if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t dx = 0; dx < 3; ++dx) {
                const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + dx) - 1;
                if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                const std::size_t ioff =
                    (static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * cin;
                const std::size_t koff = (dy * 3 + dx) * cin * cout;
                for (std::size_t ci = 0; ci < cin; ++ci) {
                  const double* krow = &k[koff + ci * cout];
                  if (gk) {
                    const double v = in[ioff + ci];
                    double* gkrow = &(*gk)[koff + ci * cout];
                    for (std::size_t co = 0; co < cout; ++co) gkrow[co] += v * g[co];
                  }
                  if (gin) {
                    double s = 0.0;
                    for (std::size_t co = 0; co < cout; ++co) s += krow[co] * g[co];
                    (*gin)[ioff + ci] += s;
                  }
                }
              }
            }
          }
        }
      });
}

Var maxpool2(const Var& input) {
  const Tensor& in = input.value();
  require_rank(in, 3, "maxpool2 input");
  const std::size_t h = in.dim(0), w = in.dim(1), c = in.dim(2);
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor out({oh, ow, c});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        // Row-major scan with strict '>' keeps the earliest element on ties.
        for (std::size_t dy = 0; dy < 2; ++dy) {
          const std::size_t yy = 2 * y + dy;
          if (yy >= h) continue;
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t xx = 2 * x + dx;
            if (xx >= w) continue;
            const std::size_t idx = (yy * w + xx) * c + ch;
            if (!found || in[idx] > best) {
              best = in[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        const std::size_t o = (y * ow + x) * c + ch;
        out[o] = best;
        argmax[o] = best_idx;
      }
    }
  }
  return input.tape().record(std::move(out), {input},
                             [argmax = std::move(argmax)](const BackwardArgs& ctx) {
                               Tensor& g = *ctx.grads[0];
                               for (std::size_t o = 0; o < argmax.size(); ++o) {
                                 g[argmax[o]] += ctx.grad_output[o];
                               }
                             });
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return a.tape().record(std::move(out), {a}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    const Tensor& x = *ctx.inputs[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) g[i] += ctx.grad_output[i];
    }
  });
}

Var tanh_act(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::tanh(v);
  return a.tape().record(std::move(out), {a}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    const Tensor& y = ctx.output;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.grad_output[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid_act(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  return a.tape().record(std::move(out), {a}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    const Tensor& y = ctx.output;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.grad_output[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 1, "softmax");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits.data()) mx = std::max(mx, v);
  Tensor out = logits;
  double z = 0.0;
  for (auto& v : out.data()) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : out.data()) v /= z;
  return out;
}

Var softmax(const Var& logits) {
  return logits.tape().record(softmax(logits.value()), {logits}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    const Tensor& p = ctx.output;
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += ctx.grad_output[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) g[i] += p[i] * (ctx.grad_output[i] - dot);
  });
}

void require_simplex(const Tensor& p, const char* what) {
  require_rank(p, 1, what);
  double s = 0.0;
  for (double v : p.data()) {
    if (!(v >= 0.0)) throw ValidationError(std::string(what) + ": negative or NaN entry");
    s += v;
  }
  if (std::abs(s - 1.0) > kSimplexTolerance) {
    throw ValidationError(std::string(what) + ": entries sum to " + std::to_string(s) +
                          ", not 1");
  }
}

double cross_entropy(const Tensor& target, const Tensor& predicted) {
  require_same_shape(target, predicted, "cross_entropy");
  require_simplex(target, "cross_entropy target");
  require_simplex(predicted, "cross_entropy prediction");
  double loss = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] == 0.0) continue;
    loss -= target[k] * std::log(std::max(predicted[k], kLogClip));
  }
  return loss;
}

Var cross_entropy(const Tensor& target, const Var& predicted) {
  const double loss = cross_entropy(target, predicted.value());
  return predicted.tape().record(
      Tensor::scalar(loss), {predicted}, [target](const BackwardArgs& ctx) {
        Tensor& g = *ctx.grads[0];
        const Tensor& p = *ctx.inputs[0];
        const double go = ctx.grad_output[0];
        for (std::size_t k = 0; k < p.size(); ++k) {
          // Clipped entries are constant in the loss.
          if (target[k] != 0.0 && p[k] > kLogClip) g[k] -= go * target[k] / p[k];
        }
      });
}

Var reshape(const Var& a, Shape shape) {
  return a.tape().record(a.value().reshaped(std::move(shape)), {a}, [](const BackwardArgs& ctx) {
    Tensor& g = *ctx.grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.grad_output[i];
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  std::vector<double> data;
  for (const Var& p : parts) {
    require_rank(p.value(), 1, "concat part");
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  return parts.front().tape().record(Tensor::vector(std::move(data)), parts,
                                     [](const BackwardArgs& ctx) {
                                       std::size_t off = 0;
                                       for (std::size_t i = 0; i < ctx.inputs.size(); ++i) {
                                         const std::size_t n = ctx.inputs[i]->size();
                                         if (Tensor* g = ctx.grads[i]) {
                                           for (std::size_t j = 0; j < n; ++j) {
                                             (*g)[j] += ctx.grad_output[off + j];
                                           }
                                         }
                                         off += n;
                                       }
                                     });
}

}  // namespace prnn::ops
