#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "prnn/dataset.hpp"
#include "prnn/metrics.hpp"
#include "prnn/training.hpp"

namespace prnn::harness {

/// Everything one command needs. Loaded from JSON; CLI flags override fields.
struct ExperimentConfig {
  synth::DatasetConfig dataset;
  std::string preset = "desk";
  Hyperparams hyper = Hyperparams::desk();
  Variant variant = Variant::kFull;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path out = "runs";
  /// Dataset manifest consumed by train and ablate.
  std::filesystem::path manifest;
  /// Test sequences per class whose per-frame confidences go into trace files.
  std::size_t traces_per_class = 1;

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Written next to every checkpoint so it can be evaluated on its own.
struct CheckpointInfo {
  std::string preset;
  std::size_t num_classes = 0;
  std::string variant;
  std::string stage;
  std::uint64_t seed = 0;
};

struct TrainOutcome {
  TrainingRun run;
  Metrics test_metrics;
  std::filesystem::path final_checkpoint;
};

struct EvalRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::string split = "test";
  /// When non-empty, metrics.json and confusion.csv are written here.
  std::filesystem::path out;
  bool traces = false;
};

struct AblationRow {
  Variant variant;
  std::uint64_t seed;
  double accuracy;
};

struct AblationSummary {
  Variant variant;
  double mean;
  double stddev;  // sample standard deviation, 0 for one seed
  std::size_t runs;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;  // component-table row order
  double seconds = 0.0;
};

std::filesystem::path cmd_gen_data(const ExperimentConfig& config);
TrainOutcome cmd_train(const ExperimentConfig& config);
/// Depth-only evaluation; skeleton files are never opened.
Metrics cmd_eval(const EvalRequest& request);
AblationResult cmd_ablate(const ExperimentConfig& config);

void write_checkpoint_info(const CheckpointInfo& info, const std::filesystem::path& dir);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);

/// Exit status for an exception escaping a command:
/// 2 config/input, 3 shape mismatch, 4 numeric failure, 1 anything else.
int exit_code_for(const std::exception& e);

std::string metrics_json(const Metrics& m, const std::string& variant, std::uint64_t seed,
                         const std::vector<EpochRecord>& curve);
std::string confusion_csv(const Metrics& m);
std::string curves_csv(const std::vector<EpochRecord>& curve);

}  // namespace prnn::harness
