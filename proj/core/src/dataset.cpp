#include "prnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "config_json.hpp"
#include "prnn/errors.hpp"
#include "prnn/preprocess.hpp"
#include "prnn/rng.hpp"
#include "prnn/tensor_io.hpp"

namespace prnn::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 3> kSplits = {"train", "val", "test"};

json entry_to_json(const ManifestEntry& e) {
  return json{{"frames", e.frames}, {"skeleton", e.skeleton}, {"label", e.label},
              {"seed", e.seed}, {"length", e.length}};
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.frames = j.at("frames").get<std::string>();
  e.skeleton = j.at("skeleton").get<std::string>();
  e.label = j.at("label").get<std::size_t>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.length = j.at("length").get<std::size_t>();
  return e;
}

std::vector<ManifestEntry>& split_ref(DatasetManifest& m, std::size_t i) {
  return i == 0 ? m.train : (i == 1 ? m.val : m.test);
}

const std::vector<ManifestEntry>& split_ref(const DatasetManifest& m, std::size_t i) {
  return i == 0 ? m.train : (i == 1 ? m.val : m.test);
}

}  // namespace

json dataset_config_to_json(const DatasetConfig& c) {
  return json{{"num_classes", c.num_classes}, {"per_class", c.per_class},
              {"split", c.split}, {"base_seed", c.base_seed},
              {"frame_size", c.frame_size}, {"t_min", c.t_min}, {"t_max", c.t_max},
              {"jitter_sigma", c.jitter_sigma}, {"blob_sigma", c.blob_sigma},
              {"pose_strength", c.pose_strength},
              {"occlusion", occlusion_name(c.occlusion)}};
}

DatasetConfig dataset_config_from_json(const json& j) {
  static const std::array<const char*, 11> kKeys = {
      "num_classes", "per_class", "split", "base_seed", "frame_size", "t_min",
      "t_max", "jitter_sigma", "blob_sigma", "pose_strength", "occlusion"};
  if (!j.is_object()) throw ValidationError("dataset config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ValidationError("unknown dataset config key '" + key + "'");
    }
  }
  DatasetConfig c;
  c.num_classes = j.value("num_classes", c.num_classes);
  c.per_class = j.value("per_class", c.per_class);
  c.split = j.value("split", c.split);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.frame_size = j.value("frame_size", c.frame_size);
  c.t_min = j.value("t_min", c.t_min);
  c.t_max = j.value("t_max", c.t_max);
  c.jitter_sigma = j.value("jitter_sigma", c.jitter_sigma);
  c.blob_sigma = j.value("blob_sigma", c.blob_sigma);
  c.pose_strength = j.value("pose_strength", c.pose_strength);
  if (j.contains("occlusion")) c.occlusion = parse_occlusion(j.at("occlusion").get<std::string>());
  return c;
}

void DatasetConfig::validate() const {
  if (num_classes < 2) throw ValidationError("dataset needs K >= 2 classes");
  if (per_class == 0) throw ValidationError("per_class must be >= 1");
  if (t_min < 2 || t_max < t_min) throw ValidationError("need 2 <= t_min <= t_max");
  for (double f : split) {
    if (f < 0.0) throw ValidationError("split fractions must be >= 0");
  }
  if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1");
  }
  if (pose_strength < 0.0 || pose_strength > 1.0) {
    throw ValidationError("pose_strength must lie in [0, 1]");
  }
  if (frame_size % 32 != 0 || frame_size == 0) {
    throw ValidationError("frame_size must be a positive multiple of 32");
  }
}

std::array<std::size_t, 3> DatasetConfig::split_counts() const {
  const double n = static_cast<double>(per_class);
  const auto train = static_cast<std::size_t>(std::llround(n * split[0]));
  const auto val = std::min(per_class - std::min(train, per_class),
                            static_cast<std::size_t>(std::llround(n * split[1])));
  const std::size_t used = std::min(per_class, train + val);
  return {std::min(train, per_class), val, per_class - used};
}

const std::vector<ManifestEntry>& DatasetManifest::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ValidationError("unknown split '" + name + "'");
}

std::uint64_t sequence_seed(std::uint64_t base_seed, std::size_t class_id, std::size_t index) {
  return hash_seed(base_seed, class_id, index);
}

DatasetManifest plan_dataset(const DatasetConfig& config) {
  config.validate();
  DatasetManifest m;
  m.prng = std::string(CounterRng::kName);
  m.config = config;
  const auto counts = config.split_counts();
  for (std::size_t k = 0; k < config.num_classes; ++k) {
    std::size_t index = 0;
    for (std::size_t s = 0; s < kSplits.size(); ++s) {
      for (std::size_t i = 0; i < counts[s]; ++i, ++index) {
        ManifestEntry e;
        e.label = k;
        e.seed = sequence_seed(config.base_seed, k, index);
        CounterRng len_rng(hash_seed(e.seed, "length"));
        e.length = config.t_min + len_rng.below(config.t_max - config.t_min + 1);
        const std::string stem = std::string(kSplits[s]) + "/c" + std::to_string(k) + "_i" +
                                 std::to_string(index);
        e.frames = stem + "_frames.ptns";
        e.skeleton = stem + "_skeleton.ptns";
        split_ref(m, s).push_back(std::move(e));
      }
    }
  }
  return m;
}

DatasetManifest build_dataset(const DatasetConfig& config, const fs::path& out_dir) {
  DatasetManifest m = plan_dataset(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  RenderConfig render;
  render.frame_size = config.frame_size;
  render.jitter_sigma = config.jitter_sigma;
  render.blob_sigma = config.blob_sigma;
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    fs::create_directories(out_dir / kSplits[s], ec);
    if (ec) throw IoError("cannot create split directory: " + ec.message());
    for (const auto& e : split_ref(m, s)) {
      const auto spec = make_action_spec(e.label, config.frame_size, config.occlusion, config.pose_strength);
      const auto seq = generate_sequence(spec, e.seed, e.length, render);
      save_tensor(out_dir / e.frames, seq.frames);
      save_tensor(out_dir / e.skeleton, seq.skeleton);
    }
  }
  write_manifest(m, out_dir / kManifestFile);
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["version"] = m.version;
  j["prng"] = m.prng;
  j["num_classes"] = m.config.num_classes;
  j["config"] = dataset_config_to_json(m.config);
  json splits = json::object();
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    json arr = json::array();
    for (const auto& e : split_ref(m, s)) arr.push_back(entry_to_json(e));
    splits[kSplits[s]] = std::move(arr);
  }
  j["splits"] = std::move(splits);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest not found: " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw ValidationError("unsupported manifest version");
    m.prng = j.at("prng").get<std::string>();
    m.config = dataset_config_from_json(j.at("config"));
    for (std::size_t s = 0; s < kSplits.size(); ++s) {
      for (const auto& e : j.at("splits").at(kSplits[s])) split_ref(m, s).push_back(entry_from_json(e));
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void attach_skeleton(Sample& sample, const Tensor& skeleton, std::size_t frame_size) {
  if (skeleton.rank() != 3 || skeleton.dim(0) != sample.frames.dim(0)) {
    throw DimensionError("skeleton " + shape_to_string(skeleton.shape()) +
                         " does not match frames " + shape_to_string(sample.frames.shape()));
  }
  const double side = static_cast<double>(frame_size);
  sample.privileged = pi::privileged_features(skeleton, frame_size);
  sample.keypoint_targets =
      pi::regression_targets(skeleton, pi::Region{side / 2.0, side / 2.0, side, side});
}

std::vector<Sample> load_split(const DatasetManifest& m, const fs::path& dir,
                               const std::string& split, bool load_skeletons) {
  std::vector<Sample> out;
  for (const auto& e : m.split(split)) {
    Sample s;
    s.id = e.frames;
    s.label = e.label;
    s.frames = load_tensor(dir / e.frames);
    if (s.frames.rank() != 3 || s.frames.dim(1) != m.config.frame_size ||
        s.frames.dim(2) != m.config.frame_size) {
      throw DimensionError("frames " + e.frames + " have shape " +
                           shape_to_string(s.frames.shape()));
    }
    if (load_skeletons) attach_skeleton(s, load_tensor(dir / e.skeleton), m.config.frame_size);
    out.push_back(std::move(s));
  }
  return out;
}

Dataset load_training_dataset(const fs::path& manifest_path) {
  const auto m = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  Dataset d;
  d.num_classes = m.config.num_classes;
  d.train = load_split(m, dir, "train", true);
  d.val = load_split(m, dir, "val", true);
  d.test = load_split(m, dir, "test", false);
  return d;
}

}  // namespace prnn::synth
