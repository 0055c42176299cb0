#include "prnn/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "prnn/errors.hpp"

namespace prnn::pi {

namespace {

void require_skeleton(const Tensor& s, const char* what) {
  if (s.rank() != 3 || s.dim(2) != 3) {
    throw DimensionError(std::string(what) + ": expected [T x S x 3] skeleton, got " +
                         shape_to_string(s.shape()));
  }
}

// Solves A x = b for a small dense system by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (std::abs(a[piv * n + col]) < 1e-300) throw NumericError("singular Savitzky-Golay system");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

}  // namespace

Tensor normalize_skeleton(const Tensor& skeleton, std::size_t hip_index) {
  require_skeleton(skeleton, "normalize_skeleton");
  if (hip_index >= skeleton.dim(1)) {
    throw ValidationError("normalize_skeleton: hip-center joint " + std::to_string(hip_index) +
                          " missing from skeleton with " + std::to_string(skeleton.dim(1)) +
                          " joints");
  }
  Tensor out = skeleton;
  const std::size_t frames = skeleton.dim(0), joints = skeleton.dim(1);
  for (std::size_t t = 0; t < frames; ++t) {
    const double hx = skeleton.at(t, hip_index, 0);
    const double hy = skeleton.at(t, hip_index, 1);
    const double hz = skeleton.at(t, hip_index, 2);
    for (std::size_t s = 0; s < joints; ++s) {
      out.at(t, s, 0) -= hx;
      out.at(t, s, 1) -= hy;
      out.at(t, s, 2) -= hz;
    }
  }
  return out;
}

std::vector<double> savgol_coefficients(std::size_t window, std::size_t order, std::ptrdiff_t at) {
  if (window % 2 == 0) throw ValidationError("Savitzky-Golay window must be odd");
  if (order >= window) throw ValidationError("Savitzky-Golay order must be below the window");
  const auto m = static_cast<std::ptrdiff_t>(window / 2);
  const std::size_t p = order + 1;
  // Normal equations (J^T J) a = J^T e_i; the estimate at offset `at` is
  // sum_q a_q at^q, which is linear in the samples.
  std::vector<double> jtj(p * p, 0.0);
  for (std::ptrdiff_t k = -m; k <= m; ++k) {
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) {
        jtj[r * p + c] += std::pow(static_cast<double>(k), static_cast<double>(r + c));
      }
    }
  }
  std::vector<double> basis(p);
  for (std::size_t q = 0; q < p; ++q) basis[q] = std::pow(static_cast<double>(at), static_cast<double>(q));
  // Weight for sample k is basis^T (J^T J)^{-1} J_k^T; solve once for z = (J^T J)^{-1} basis.
  const std::vector<double> z = solve(jtj, basis, p);
  std::vector<double> coeffs(window);
  for (std::ptrdiff_t k = -m; k <= m; ++k) {
    double w = 0.0;
    for (std::size_t q = 0; q < p; ++q) w += z[q] * std::pow(static_cast<double>(k), static_cast<double>(q));
    coeffs[static_cast<std::size_t>(k + m)] = w;
  }
  return coeffs;
}

std::vector<double> sg_smooth(const std::vector<double>& series, std::size_t window,
                              std::size_t order) {
  const auto coeffs = savgol_coefficients(window, order);
  if (series.size() < window) return series;
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const auto m = static_cast<std::ptrdiff_t>(window / 2);
  auto sample = [&](std::ptrdiff_t i) {
    if (i < 0) return 2.0 * series.front() - series[static_cast<std::size_t>(-i)];
    if (i >= n) return 2.0 * series.back() - series[static_cast<std::size_t>(2 * (n - 1) - i)];
    return series[static_cast<std::size_t>(i)];
  };
  std::vector<double> out(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::ptrdiff_t k = -m; k <= m; ++k) s += coeffs[static_cast<std::size_t>(k + m)] * sample(i + k);
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

Tensor sg_smooth_skeleton(const Tensor& skeleton, std::size_t window, std::size_t order) {
  require_skeleton(skeleton, "sg_smooth_skeleton");
  Tensor out = skeleton;
  const std::size_t frames = skeleton.dim(0);
  std::vector<double> series(frames);
  for (std::size_t s = 0; s < skeleton.dim(1); ++s) {
    for (std::size_t d = 0; d < 3; ++d) {
      for (std::size_t t = 0; t < frames; ++t) series[t] = skeleton.at(t, s, d);
      const auto smoothed = sg_smooth(series, window, order);
      for (std::size_t t = 0; t < frames; ++t) out.at(t, s, d) = smoothed[t];
    }
  }
  return out;
}

Tensor normalize_keypoints(const Tensor& pixels, const Region& region) {
  if (pixels.rank() != 2 || pixels.dim(1) != 2) {
    throw DimensionError("normalize_keypoints: expected [N x 2], got " +
                         shape_to_string(pixels.shape()));
  }
  if (!(region.width > 0.0) || !(region.height > 0.0)) {
    throw ValidationError("normalize_keypoints: region width and height must be positive");
  }
  Tensor out = pixels;
  for (std::size_t i = 0; i < pixels.dim(0); ++i) {
    out.at(i, 0) = std::clamp(2.0 * (pixels.at(i, 0) - region.cx) / region.width, -1.0, 1.0);
    out.at(i, 1) = std::clamp(2.0 * (pixels.at(i, 1) - region.cy) / region.height, -1.0, 1.0);
  }
  return out;
}

Tensor denormalize_keypoints(const Tensor& normalized, const Region& region) {
  if (normalized.rank() != 2 || normalized.dim(1) != 2) {
    throw DimensionError("denormalize_keypoints: expected [N x 2], got " +
                         shape_to_string(normalized.shape()));
  }
  Tensor out = normalized;
  for (std::size_t i = 0; i < normalized.dim(0); ++i) {
    out.at(i, 0) = region.cx + 0.5 * region.width * normalized.at(i, 0);
    out.at(i, 1) = region.cy + 0.5 * region.height * normalized.at(i, 1);
  }
  return out;
}

Tensor regression_targets(const Tensor& skeleton, const Region& region) {
  require_skeleton(skeleton, "regression_targets");
  const std::size_t frames = skeleton.dim(0);
  for (auto j : kRegressionJoints) {
    if (j >= skeleton.dim(1)) throw ValidationError("regression_targets: joint subset missing");
  }
  Tensor out({frames, kNumKeypoints, 2});
  Tensor px({kNumKeypoints, 2});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      px.at(k, 0) = skeleton.at(t, kRegressionJoints[k], 0);
      px.at(k, 1) = skeleton.at(t, kRegressionJoints[k], 1);
    }
    const Tensor n = normalize_keypoints(px, region);
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      out.at(t, k, 0) = n.at(k, 0);
      out.at(t, k, 1) = n.at(k, 1);
    }
  }
  return out;
}

Tensor privileged_features(const Tensor& skeleton, std::size_t frame_size) {
  const Tensor smoothed = sg_smooth_skeleton(normalize_skeleton(skeleton));
  const std::size_t frames = skeleton.dim(0), joints = skeleton.dim(1);
  const double half = 0.5 * static_cast<double>(frame_size);
  Tensor out({frames, joints * 3});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < joints; ++s) {
      out.at(t, s * 3 + 0) = smoothed.at(t, s, 0) / half;
      out.at(t, s * 3 + 1) = smoothed.at(t, s, 1) / half;
      out.at(t, s * 3 + 2) = smoothed.at(t, s, 2);
    }
  }
  return out;
}

}  // namespace prnn::pi
