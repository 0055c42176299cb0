#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prnn/latent_pi.hpp"
#include "prnn/model.hpp"
#include "prnn/params.hpp"
#include "prnn/tensor.hpp"

namespace prnn {

/// One labelled sequence held in memory.
struct Sample {
  std::string id;
  Tensor frames;            // [T x H x W], values in [-1, 1]
  Tensor privileged;        // [T x 3S] pre-training input; empty when unavailable
  Tensor keypoint_targets;  // [T x 6 x 2] normalized regression targets; empty when unavailable
  std::size_t label = 0;    // 0-based
};

struct Dataset {
  std::size_t num_classes = 0;
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

struct Hyperparams {
  double lambda = 1.0;
  double alpha = 0.4;
  double beta = 0.5;
  double lr = 1e-3;
  std::size_t batch = 10;
  std::size_t em_max_iters = 20;
  double em_tol = 1e-6;
  std::size_t em_epochs_per_iter = 1;
  double bridging_smoothing = 0.1;
  std::size_t max_epochs = 30;
  /// Stop after this many epochs without a better validation score.
  std::size_t patience = 8;

  /// Defaults for the desk benchmark. The regression term is summed over
  /// every frame, so a smaller weight keeps it from swamping the final-frame
  /// classification loss on short synthetic sequences.
  static Hyperparams desk();

  void validate() const;
};

struct EpochRecord {
  std::string stage;
  std::size_t iteration = 0;
  double loss = 0.0;  // training loss, or Q for the refining stage
  double val_accuracy = 0.0;
  double val_loss = 0.0;
};

struct StageResult {
  ParameterStore params;
  std::vector<EpochRecord> curve;
  std::size_t best_iteration = 0;
};

/// Diagnostics of one EM iteration.
struct EmIteration {
  std::size_t iteration = 0;
  double q_before_bridging = 0.0;  // Q(theta, M_old)
  double q_after_bridging = 0.0;   // Q(theta, M_new), theta unchanged
  double q_end = 0.0;              // Q after the network epoch
  double max_posterior_error = 0.0;   // max |sum u - 1| over sequences
  double min_posterior_entry = 0.0;
  double max_bridging_row_error = 0.0;
  double refining_loss = 0.0;
};

struct RefineResult {
  ParameterStore params;
  pi::BridgingMatrix bridging = pi::BridgingMatrix::identity(1);
  std::vector<EmIteration> iterations;
  std::vector<EpochRecord> curve;
  std::size_t best_iteration = 0;
};

/// Mean-of-diagonal accuracy plus average classification loss on depth-only input.
struct SplitScore {
  double accuracy = 0.0;
  double loss = 0.0;
};

SplitScore score_split(const ParameterStore& params, const ModelConfig& config,
                       const std::vector<Sample>& samples, bool with_skeleton = false);

/// Per-sequence loss builder used by the generic epoch loop.
using SequenceLoss =
    std::function<Var(Tape& tape, const ParameterStore& params, std::size_t sample_index)>;

/// One shuffled pass of minibatch Adam. Losses are summed over the minibatch.
/// Returns the summed loss over the epoch. Throws NumericError on NaN/Inf.
double run_epoch(ParameterStore& params, std::size_t num_samples, const SequenceLoss& loss,
                 const Hyperparams& hyper, CounterRng& rng);

/// Stage 1: depth + skeleton embedding trained with final-frame cross entropy.
StageResult run_pretrain(const Dataset& data, const ModelConfig& config, const Hyperparams& hyper,
                         std::uint64_t seed);

/// Stage 2: multi-task loss. Starts from `pretrained` (its skeleton weights
/// dropped) or from a fresh initialization when null.
StageResult run_learning(const Dataset& data, const ModelConfig& config,
                         const ParameterStore* pretrained, const Hyperparams& hyper,
                         std::uint64_t seed);

/// Stage 3: EM over latent PI and the bridging matrix.
RefineResult run_refining(const Dataset& data, const ModelConfig& config,
                          const ParameterStore& learned, const Hyperparams& hyper,
                          std::uint64_t seed);

/// Depth-only classification baseline trained from scratch.
StageResult run_vanilla(const Dataset& data, const ModelConfig& config, const Hyperparams& hyper,
                        std::uint64_t seed);

/// Secondary-task logits y' for each sample at the given parameters.
std::vector<Tensor> secondary_logits(const ParameterStore& params, const ModelConfig& config,
                                     const std::vector<Sample>& samples);

enum class Variant { kVanillaCnnRnn, kNoPretrain, kNoRefine, kFull };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
/// Row order of the component ablation table.
std::vector<Variant> ablation_order();

struct StageCheckpoint {
  std::string name;  // "pretrain", "learn", "refine" or "vanilla"
  ParameterStore params;
};

struct TrainingRun {
  Variant variant = Variant::kFull;
  std::vector<StageCheckpoint> checkpoints;
  std::optional<pi::BridgingMatrix> bridging;
  std::vector<EpochRecord> curve;
  std::vector<EmIteration> em;
  const ParameterStore& final_params() const { return checkpoints.back().params; }
};

/// Runs the stages that make up the variant; kFull is pretrain -> learn -> refine.
TrainingRun train_variant(const Dataset& data, const ModelConfig& config,
                          const Hyperparams& hyper, Variant variant, std::uint64_t seed);

TrainingRun train_three_step(const Dataset& data, const ModelConfig& config,
                             const Hyperparams& hyper, std::uint64_t seed);

}  // namespace prnn
