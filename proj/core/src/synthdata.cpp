#include "prnn/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prnn/encoder.hpp"
#include "prnn/errors.hpp"
#include "prnn/rng.hpp"

namespace prnn::synth {

std::string occlusion_name(Occlusion o) {
  return o == Occlusion::kLowerBody ? "lower_body" : "none";
}

Occlusion parse_occlusion(const std::string& name) {
  if (name == "none") return Occlusion::kNone;
  if (name == "lower_body") return Occlusion::kLowerBody;
  throw ValidationError("unknown occlusion mode '" + name + "'");
}

std::size_t occlusion_start_row(std::size_t frame_size) { return (5 * frame_size + 7) / 8; }

ActionSpec make_action_spec(std::size_t class_id, std::size_t frame_size, Occlusion occlusion,
                            double pose_strength) {
  if (pose_strength < 0.0 || pose_strength > 1.0) {
    throw ValidationError("pose_strength must lie in [0, 1]");
  }
  const double u = static_cast<double>(frame_size) / 32.0;
  ActionSpec spec;
  spec.class_id = class_id;
  spec.occlusion = occlusion;
  //                       x      y     depth
  spec.joints[pi::kHead] = {16 * u, 6 * u, 0.80};
  spec.joints[pi::kLeftHand] = {10 * u, 14 * u, 0.95};
  spec.joints[pi::kRightHand] = {22 * u, 14 * u, 0.95};
  spec.joints[pi::kLeftFoot] = {12 * u, 24 * u, 0.65};
  spec.joints[pi::kRightFoot] = {20 * u, 24 * u, 0.65};
  spec.joints[pi::kHipCenter] = {16 * u, 17 * u, 0.75};

  // A slow head sway shared by every class.
  spec.joints[pi::kHead].amp_x = 0.5 * u;
  spec.joints[pi::kHead].freq = 0.05;

  static constexpr std::array<std::size_t, 4> kLimbs = {pi::kLeftHand, pi::kRightHand,
                                                        pi::kLeftFoot, pi::kRightFoot};
  const std::size_t limb = kLimbs[class_id % 4];
  const bool horizontal = (class_id / 4) % 2 == 1;
  const bool is_hand = limb == pi::kLeftHand || limb == pi::kRightHand;
  const bool is_left = limb == pi::kLeftHand || limb == pi::kLeftFoot;
  auto& j = spec.joints[limb];
  // The active limb also holds a class-specific pose: raised for vertical
  // motions, stretched outward for horizontal ones.
  const double rest_x = j.base_x, rest_y = j.base_y;
  if (horizontal) {
    const double target = is_hand ? (is_left ? 7.0 : 24.0) : (is_left ? 9.0 : 23.0);
    j.base_x = rest_x + pose_strength * (target * u - rest_x);
    j.amp_x = 3.0 * u;
  } else {
    const double target = is_hand ? 8.0 : 20.0;
    j.base_y = rest_y + pose_strength * (target * u - rest_y);
    j.amp_y = (is_hand ? 3.5 : 3.0) * u;
  }
  j.depth = 1.0;
  j.freq = 0.08 * (1.0 + 0.6 * static_cast<double>(class_id / 8));
  return spec;
}

double spec_distance(const ActionSpec& a, const ActionSpec& b) {
  double d = 0.0;
  for (std::size_t s = 0; s < pi::kNumJoints; ++s) {
    const auto& x = a.joints[s];
    const auto& y = b.joints[s];
    for (double diff : {x.base_x - y.base_x, x.base_y - y.base_y, x.depth - y.depth,
                        x.amp_x - y.amp_x, x.amp_y - y.amp_y, x.freq - y.freq, x.phase - y.phase}) {
      d = std::max(d, std::abs(diff));
    }
  }
  return d;
}

SyntheticSequence generate_sequence(const ActionSpec& spec, std::uint64_t seed,
                                    std::size_t length, const RenderConfig& render) {
  if (length < 2) throw ValidationError("synthetic sequences need at least 2 frames");
  if (render.frame_size < 8) throw ValidationError("frame_size too small");
  if (!(render.blob_sigma > 0.0)) throw ValidationError("blob_sigma must be positive");
  if (render.jitter_sigma < 0.0) throw ValidationError("jitter_sigma must be >= 0");

  CounterRng rng(seed);
  const double off_x = rng.uniform(-render.offset_range, render.offset_range);
  const double off_y = rng.uniform(-render.offset_range, render.offset_range);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double speed = rng.uniform(0.85, 1.15);

  const std::size_t n = render.frame_size;
  const std::size_t joints = pi::kNumJoints;
  SyntheticSequence seq;
  seq.label = spec.class_id;
  seq.seed = seed;
  seq.skeleton = Tensor({length, joints, 3});
  Tensor raw({length, n, n});

  const double lo = render.margin;
  const double hi = static_cast<double>(n - 1) - render.margin;
  const double inv2s2 = 1.0 / (2.0 * render.blob_sigma * render.blob_sigma);
  const int reach = static_cast<int>(std::ceil(4.0 * render.blob_sigma));

  for (std::size_t t = 0; t < length; ++t) {
    const double tt = static_cast<double>(t);
    for (std::size_t s = 0; s < joints; ++s) {
      const auto& j = spec.joints[s];
      const double arg = 2.0 * std::numbers::pi * j.freq * speed * tt + j.phase + phase;
      // Jitter is truncated at 3 sigma.
      const double jx = std::clamp(rng.normal(), -3.0, 3.0) * render.jitter_sigma;
      const double jy = std::clamp(rng.normal(), -3.0, 3.0) * render.jitter_sigma;
      const double x = j.base_x + off_x + j.amp_x * std::sin(arg) + jx;
      const double y = j.base_y + off_y + j.amp_y * std::sin(arg) + jy;
      if (x < lo || x > hi || y < lo || y > hi) {
        throw ValidationError("joint " + std::to_string(s) + " leaves the frame at t=" +
                              std::to_string(t));
      }
      seq.skeleton.at(t, s, 0) = x;
      seq.skeleton.at(t, s, 1) = y;
      seq.skeleton.at(t, s, 2) = j.depth;

      const int cx = static_cast<int>(std::lround(x));
      const int cy = static_cast<int>(std::lround(y));
      for (int py = std::max(0, cy - reach); py <= std::min<int>(n - 1, cy + reach); ++py) {
        for (int px = std::max(0, cx - reach); px <= std::min<int>(n - 1, cx + reach); ++px) {
          const double dx = px - x, dy = py - y;
          const double v = j.depth * std::exp(-(dx * dx + dy * dy) * inv2s2);
          double& cell = raw[(t * n + static_cast<std::size_t>(py)) * n + static_cast<std::size_t>(px)];
          cell = std::max(cell, v);
        }
      }
    }
  }

  seq.frames = encoder::normalize_depth(raw, 0.0, 1.0).pixels;
  if (spec.occlusion == Occlusion::kLowerBody) {
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t y = occlusion_start_row(n); y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) seq.frames[(t * n + y) * n + x] = 0.0;
      }
    }
  }
  return seq;
}

}  // namespace prnn::synth
