#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prnn/synthdata.hpp"
#include "prnn/training.hpp"

namespace prnn::synth {

struct DatasetConfig {
  std::size_t num_classes = 4;
  std::size_t per_class = 10;
  std::array<double, 3> split{0.6, 0.2, 0.2};  // train, val, test
  std::uint64_t base_seed = 7;
  std::size_t frame_size = 32;
  std::size_t t_min = 10;
  std::size_t t_max = 30;
  double jitter_sigma = 0.3;
  double blob_sigma = 1.5;
  double pose_strength = 0.5;
  Occlusion occlusion = Occlusion::kNone;

  void validate() const;
  /// Per-class split sizes; the test split takes the remainder.
  std::array<std::size_t, 3> split_counts() const;
};

struct ManifestEntry {
  std::string frames;    // path relative to the manifest directory
  std::string skeleton;  // path relative to the manifest directory
  std::size_t label = 0;
  std::uint64_t seed = 0;
  std::size_t length = 0;
};

struct DatasetManifest {
  int version = 1;
  std::string prng;
  DatasetConfig config;
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> val;
  std::vector<ManifestEntry> test;

  const std::vector<ManifestEntry>& split(const std::string& name) const;
};

inline constexpr const char* kManifestFile = "manifest.json";

/// Per-sequence seed, a pure function of (base seed, class, index).
std::uint64_t sequence_seed(std::uint64_t base_seed, std::size_t class_id, std::size_t index);

/// Builds every sequence in memory, in manifest order.
DatasetManifest plan_dataset(const DatasetConfig& config);

/// Writes sequence tensors under out_dir/<split>/ and out_dir/manifest.json.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Loads one split. With load_skeletons == false no skeleton file is opened,
/// and privileged inputs / regression targets stay empty.
std::vector<Sample> load_split(const DatasetManifest& manifest,
                               const std::filesystem::path& manifest_dir,
                               const std::string& split, bool load_skeletons);

/// Fills privileged inputs and regression targets from a raw skeleton.
void attach_skeleton(Sample& sample, const Tensor& skeleton, std::size_t frame_size);

/// Train and val with skeletons; test depth-only.
Dataset load_training_dataset(const std::filesystem::path& manifest_path);

}  // namespace prnn::synth
