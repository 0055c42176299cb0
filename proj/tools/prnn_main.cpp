// prnn: dataset generation, training, evaluation and ablation runs.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prnn/errors.hpp"
#include "prnn/experiment.hpp"

namespace {

using prnn::harness::ExperimentConfig;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string out;
  std::string manifest;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--variant", f.variant,
                  "vanilla_cnn_rnn | prnn_no_pretrain | prnn_no_refine | prnn_full");
  cmd->add_option("--out", f.out, "Output directory");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.variant.empty()) c.variant = prnn::parse_variant(f.variant);
  if (!f.out.empty()) c.out = f.out;
  if (!f.manifest.empty()) c.manifest = f.manifest;
  return c;
}

void print_metrics(const prnn::Metrics& m) {
  std::printf("mean accuracy %.4f\n", m.mean_accuracy);
  for (std::size_t k = 0; k < m.num_classes; ++k) {
    std::printf("  class %zu  %.4f\n", k, m.per_class_accuracy[k]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence classifiers trained with privileged skeleton information"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, ablate_flags;
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic depth-action dataset");
  add_common(gen, gen_flags);

  auto* train = app.add_subcommand("train", "Train one variant and evaluate it on the test split");
  add_common(train, train_flags);
  train->add_option("--manifest", train_flags.manifest, "Dataset manifest.json");

  prnn::harness::EvalRequest eval_req;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on depth input only");
  eval->add_option("--checkpoint", eval_req.checkpoint, "Checkpoint directory")->required();
  eval->add_option("--manifest", eval_req.manifest, "Dataset manifest.json")->required();
  eval->add_option("--split", eval_req.split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  std::string eval_out;
  eval->add_option("--out", eval_out, "Write metrics.json and confusion.csv here");
  eval->add_flag("--traces", eval_req.traces, "Also write per-frame distributions to traces.csv");

  auto* ablate = app.add_subcommand("ablate", "Run every variant for each seed");
  add_common(ablate, ablate_flags);
  ablate->add_option("--manifest", ablate_flags.manifest, "Dataset manifest.json");
  std::vector<std::uint64_t> seeds;
  ablate->add_option("--seeds", seeds, "Seeds to run (overrides the config list)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto path = prnn::harness::cmd_gen_data(resolve(gen_flags));
      std::cout << path.string() << "\n";
    } else if (*train) {
      const auto outcome = prnn::harness::cmd_train(resolve(train_flags));
      std::cout << prnn::variant_name(outcome.run.variant) << " -> "
                << outcome.final_checkpoint.string() << "\n";
      print_metrics(outcome.test_metrics);
    } else if (*eval) {
      eval_req.out = eval_out;
      print_metrics(prnn::harness::cmd_eval(eval_req));
    } else if (*ablate) {
      auto config = resolve(ablate_flags);
      if (!seeds.empty()) config.seeds = seeds;
      const auto result = prnn::harness::cmd_ablate(config);
      std::printf("%-18s %5s %8s %8s\n", "variant", "runs", "mean", "stddev");
      for (const auto& s : result.summary) {
        std::printf("%-18s %5zu %8.4f %8.4f\n", prnn::variant_name(s.variant).c_str(), s.runs,
                    s.mean, s.stddev);
      }
      std::printf("elapsed %.1f s\n", result.seconds);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prnn::harness::exit_code_for(e);
  }
  return 0;
}
