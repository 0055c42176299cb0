#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "prnn/preprocess.hpp"
#include "prnn/tensor.hpp"

// Seeded generator of blob-rendered depth sequences with ground-truth joints.
namespace prnn::synth {

enum class Occlusion { kNone, kLowerBody };

std::string occlusion_name(Occlusion o);
Occlusion parse_occlusion(const std::string& name);

/// Position of one joint over time: base + amp * sin(2 pi freq t + phase).
struct JointTrajectory {
  double base_x = 0.0;
  double base_y = 0.0;
  double depth = 0.0;  // blob peak intensity in (0, 1]
  double amp_x = 0.0;
  double amp_y = 0.0;
  double freq = 0.0;   // cycles per frame
  double phase = 0.0;
};

struct ActionSpec {
  std::size_t class_id = 0;
  std::array<JointTrajectory, pi::kNumJoints> joints{};
  Occlusion occlusion = Occlusion::kNone;
};

struct RenderConfig {
  std::size_t frame_size = 32;
  double blob_sigma = 1.5;
  double jitter_sigma = 0.3;
  /// Per-sequence random translation, uniform in +-offset_range pixels.
  double offset_range = 2.0;
  /// Joints must stay at least this far inside the frame border.
  double margin = 1.0;
};

/// First row masked by the lower-body occlusion.
std::size_t occlusion_start_row(std::size_t frame_size);

/// Class k moves limb (k mod 4) along axis (k / 4 mod 2) at a frequency that
/// grows with k / 8, so any two classes differ in at least one trajectory
/// parameter. pose_strength in [0, 1] moves the active limb's rest position
/// toward a raised (vertical) or outstretched (horizontal) pose.
ActionSpec make_action_spec(std::size_t class_id, std::size_t frame_size,
                            Occlusion occlusion = Occlusion::kNone, double pose_strength = 0.5);

/// Largest absolute difference over every trajectory parameter of every joint.
double spec_distance(const ActionSpec& a, const ActionSpec& b);

struct SyntheticSequence {
  Tensor frames;    // [T x H x W], values in [-1, 1]
  Tensor skeleton;  // [T x S x 3]: pixel x, pixel y, depth
  std::size_t label = 0;
  std::uint64_t seed = 0;
};

/// Renders T frames. Each joint is an isotropic Gaussian blob whose center is
/// exactly the annotated position; the background sits at -1. Lower-body
/// occlusion sets masked pixels to 0 but leaves the annotation intact.
/// Throws ValidationError if a joint leaves the frame or T < 2.
SyntheticSequence generate_sequence(const ActionSpec& spec, std::uint64_t seed,
                                    std::size_t length, const RenderConfig& render = {});

}  // namespace prnn::synth
