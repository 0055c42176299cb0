#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "prnn/tensor.hpp"

// Skeleton annotation preprocessing: hip-centering, temporal smoothing and
// keypoint normalization for the regression targets.
namespace prnn::pi {

/// Joint order used by the synthetic data and by the regression subset.
enum Joint : std::size_t {
  kHead = 0,
  kLeftHand = 1,
  kRightHand = 2,
  kLeftFoot = 3,
  kRightFoot = 4,
  kHipCenter = 5,
};
inline constexpr std::size_t kNumJoints = 6;
inline constexpr std::size_t kNumKeypoints = 6;
inline constexpr std::array<std::size_t, kNumKeypoints> kRegressionJoints = {
    kHead, kLeftHand, kRightHand, kLeftFoot, kRightFoot, kHipCenter};

/// Translates every frame of a [T x S x 3] skeleton so the hip joint sits at the origin.
Tensor normalize_skeleton(const Tensor& skeleton, std::size_t hip_index = kHipCenter);

/// Least-squares Savitzky-Golay weights for estimating the value at window
/// offset `at` (0 = center) from a window of 2m+1 samples.
std::vector<double> savgol_coefficients(std::size_t window, std::size_t order,
                                        std::ptrdiff_t at = 0);

/// Smooths one series with a sliding local polynomial. Edges use odd
/// (point-reflected) mirror padding, so linear data passes through unchanged.
/// Series shorter than the window are returned as-is.
std::vector<double> sg_smooth(const std::vector<double>& series, std::size_t window = 5,
                              std::size_t order = 2);

/// Applies sg_smooth along time to every (joint, coordinate) of a [T x S x 3] skeleton.
Tensor sg_smooth_skeleton(const Tensor& skeleton, std::size_t window = 5, std::size_t order = 2);

struct Region {
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// [N x 2] pixel coordinates -> x' = 2(x - cx)/w, y' = 2(y - cy)/h, clamped to [-1, 1].
Tensor normalize_keypoints(const Tensor& pixels, const Region& region);
Tensor denormalize_keypoints(const Tensor& normalized, const Region& region);

/// [T x S x 3] raw skeleton -> [T x 6 x 2] normalized (x, y) regression targets.
/// The depth coordinate is dropped.
Tensor regression_targets(const Tensor& skeleton, const Region& region);

/// Privileged input per frame for pre-training: hip-centered, smoothed, with
/// x and y divided by half the frame side. Returns [T x 3S].
Tensor privileged_features(const Tensor& skeleton, std::size_t frame_size);

}  // namespace prnn::pi
