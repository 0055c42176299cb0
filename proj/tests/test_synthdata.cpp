#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "prnn/dataset.hpp"
#include "prnn/errors.hpp"
#include "prnn/synthdata.hpp"
#include "prnn/tensor_io.hpp"
#include "test_util.hpp"

namespace prnn::synth {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(GenerateSequence, DeterministicPerSeed) {
  const auto spec = make_action_spec(2, 32);
  const auto a = generate_sequence(spec, 11, 12);
  const auto b = generate_sequence(spec, 11, 12);
  const auto c = generate_sequence(spec, 12, 12);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(a.skeleton, b.skeleton);
  EXPECT_NE(a.skeleton, c.skeleton);
  EXPECT_EQ(a.frames.shape(), (Shape{12, 32, 32}));
  EXPECT_EQ(a.skeleton.shape(), (Shape{12, pi::kNumJoints, 3}));
  EXPECT_EQ(a.label, 2u);
  for (double v : a.frames.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GenerateSequence, ZeroJitterBlobPeaksAtAnnotatedJoints) {
  RenderConfig render;
  render.jitter_sigma = 0.0;
  for (std::size_t k = 0; k < 8; ++k) {
    const auto seq = generate_sequence(make_action_spec(k, 32), 100 + k, 15, render);
    for (std::size_t t = 0; t < 15; ++t) {
      for (std::size_t s = 0; s < pi::kNumJoints; ++s) {
        const double x = seq.skeleton.at(t, s, 0), y = seq.skeleton.at(t, s, 1);
        const long cx = std::lround(x), cy = std::lround(y);
        // Argmax over the 3x3 neighbourhood of the annotated position.
        double best = -std::numeric_limits<double>::infinity();
        long bx = cx, by = cy;
        for (long py = cy - 1; py <= cy + 1; ++py) {
          for (long px = cx - 1; px <= cx + 1; ++px) {
            if (px < 0 || py < 0 || px >= 32 || py >= 32) continue;
            const double v = seq.frames.at(t, static_cast<std::size_t>(py), static_cast<std::size_t>(px));
            if (v > best) {
              best = v;
              bx = px;
              by = py;
            }
          }
        }
        EXPECT_LE(std::abs(bx - x), 1.0) << "class " << k << " t " << t << " joint " << s;
        EXPECT_LE(std::abs(by - y), 1.0) << "class " << k << " t " << t << " joint " << s;
        EXPECT_EQ(seq.frames.at(t, static_cast<std::size_t>(cy), static_cast<std::size_t>(cx)), best);
      }
    }
  }
}

TEST(GenerateSequence, LowerBodyOcclusionMasksPixelsButNotJoints) {
  const auto clean = generate_sequence(make_action_spec(3, 32), 5, 20);
  const auto occluded = generate_sequence(make_action_spec(3, 32, Occlusion::kLowerBody), 5, 20);
  EXPECT_EQ(clean.skeleton, occluded.skeleton);
  for (std::size_t t = 0; t < 20; ++t) {
    std::size_t masked = 0;
    for (std::size_t y = 16; y < 32; ++y) {
      for (std::size_t x = 0; x < 32; ++x) masked += occluded.frames.at(t, y, x) == 0.0;
    }
    EXPECT_GE(static_cast<double>(masked) / (16.0 * 32.0), 0.25) << "frame " << t;
  }
}

TEST(GenerateSequence, RejectsShortSequencesAndEscapingJoints) {
  const auto spec = make_action_spec(0, 32);
  EXPECT_THROW(generate_sequence(spec, 1, 1), ValidationError);
  auto bad = spec;
  bad.joints[pi::kHead].base_x = 40.0;
  EXPECT_THROW(generate_sequence(bad, 1, 5), ValidationError);
  EXPECT_THROW(make_action_spec(0, 32, Occlusion::kNone, 1.5), ValidationError);
}

// The smallest separation is the frequency step between groups of eight classes.
TEST(ActionSpec, DistinctClassesDiffer) {
  for (std::size_t a = 0; a < 12; ++a) {
    for (std::size_t b = a + 1; b < 12; ++b) {
      EXPECT_GT(spec_distance(make_action_spec(a, 32), make_action_spec(b, 32)), 0.045)
          << a << " vs " << b;
    }
  }
}

// Leave-one-out 1-NN on flattened raw skeletons of the first t_min frames.
TEST(GenerateSequence, SkeletonsAreSeparableByNearestNeighbour) {
  DatasetConfig config;
  const auto manifest = plan_dataset(config);
  std::vector<std::vector<double>> feats;
  std::vector<std::size_t> labels;
  for (const auto* split : {&manifest.train, &manifest.val, &manifest.test}) {
    for (const auto& e : *split) {
      const auto seq = generate_sequence(make_action_spec(e.label, config.frame_size), e.seed, e.length);
      std::vector<double> f;
      for (std::size_t t = 0; t < config.t_min; ++t) {
        for (std::size_t s = 0; s < pi::kNumJoints; ++s) {
          f.push_back(seq.skeleton.at(t, s, 0));
          f.push_back(seq.skeleton.at(t, s, 1));
        }
      }
      feats.push_back(f);
      labels.push_back(e.label);
    }
  }
  ASSERT_EQ(feats.size(), 40u);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t j = 0; j < feats.size(); ++j) {
      if (i == j) continue;
      double d = 0.0;
      for (std::size_t c = 0; c < feats[i].size(); ++c) d += (feats[i][c] - feats[j][c]) * (feats[i][c] - feats[j][c]);
      if (d < best) {
        best = d;
        pick = j;
      }
    }
    correct += labels[pick] == labels[i];
  }
  EXPECT_GT(static_cast<double>(correct) / 40.0, 0.25);
}

TEST(BuildDataset, DefaultConfigGivesBalancedSplits) {
  const auto dir = testing::scratch_dir("synth_balanced");
  const auto m = build_dataset(DatasetConfig{}, dir);
  EXPECT_EQ(m.train.size(), 24u);
  EXPECT_EQ(m.val.size(), 8u);
  EXPECT_EQ(m.test.size(), 8u);
  EXPECT_FALSE(m.prng.empty());
  std::set<std::uint64_t> seeds;
  for (const auto* split : {&m.train, &m.val, &m.test}) {
    std::array<int, 4> per_class{};
    for (const auto& e : *split) {
      ++per_class[e.label];
      seeds.insert(e.seed);
      EXPECT_GE(e.length, 10u);
      EXPECT_LE(e.length, 30u);
      const auto frames = load_tensor(dir / e.frames);
      const auto skel = load_tensor(dir / e.skeleton);
      EXPECT_EQ(frames.shape(), (Shape{e.length, 32, 32}));
      EXPECT_EQ(skel.shape(), (Shape{e.length, pi::kNumJoints, 3}));
    }
    const auto [lo, hi] = std::minmax_element(per_class.begin(), per_class.end());
    EXPECT_LE(*hi - *lo, 1);
  }
  EXPECT_EQ(seeds.size(), 40u);
  const auto back = read_manifest(dir / kManifestFile);
  EXPECT_EQ(back.train.size(), 24u);
  EXPECT_EQ(back.config.num_classes, 4u);
}

TEST(BuildDataset, RegenerationIsByteIdentical) {
  const auto a = testing::scratch_dir("synth_regen_a");
  const auto b = testing::scratch_dir("synth_regen_b");
  DatasetConfig config;
  config.per_class = 5;
  const auto m = build_dataset(config, a);
  build_dataset(config, b);
  EXPECT_EQ(slurp(a / kManifestFile), slurp(b / kManifestFile));
  for (const auto* split : {&m.train, &m.val, &m.test}) {
    for (const auto& e : *split) {
      EXPECT_EQ(slurp(a / e.frames), slurp(b / e.frames)) << e.frames;
      EXPECT_EQ(slurp(a / e.skeleton), slurp(b / e.skeleton)) << e.skeleton;
    }
  }
  EXPECT_EQ(sequence_seed(7, 1, 2), sequence_seed(7, 1, 2));
  EXPECT_NE(sequence_seed(7, 1, 2), sequence_seed(7, 2, 1));
}

TEST(BuildDataset, InvalidConfigsAndUnwritableOutput) {
  DatasetConfig one;
  one.num_classes = 1;
  EXPECT_THROW(one.validate(), ValidationError);
  DatasetConfig lengths;
  lengths.t_min = 1;
  EXPECT_THROW(lengths.validate(), ValidationError);

  const auto dir = testing::scratch_dir("synth_unwritable");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(build_dataset(DatasetConfig{}, dir / "file" / "sub"), IoError);
}

TEST(LoadSplit, SkeletonsAreOptional) {
  const auto dir = testing::scratch_dir("synth_load");
  DatasetConfig config;
  config.per_class = 5;
  const auto m = build_dataset(config, dir);
  const auto with = load_split(m, dir, "train", true);
  const auto without = load_split(m, dir, "train", false);
  ASSERT_EQ(with.size(), without.size());
  for (std::size_t i = 0; i < with.size(); ++i) {
    EXPECT_EQ(with[i].label, without[i].label);
    EXPECT_FALSE(with[i].privileged.empty());
    EXPECT_FALSE(with[i].keypoint_targets.empty());
    EXPECT_TRUE(without[i].privileged.empty());
    EXPECT_TRUE(without[i].keypoint_targets.empty());
  }
  for (const auto& e : m.test) std::filesystem::remove(dir / e.skeleton);
  EXPECT_NO_THROW(load_split(m, dir, "test", false));
  EXPECT_THROW(load_split(m, dir, "test", true), IoError);
  EXPECT_THROW(load_split(m, dir, "bogus", false), ValidationError);
}

}  // namespace
}  // namespace prnn::synth
