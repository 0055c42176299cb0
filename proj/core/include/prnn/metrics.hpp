#pragma once

#include <cstddef>
#include <vector>

#include "prnn/tensor.hpp"

namespace prnn {

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(const Tensor& t);

struct Metrics {
  std::size_t num_classes = 0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<double> per_class_accuracy;
  /// Mean of per-class accuracies over classes that occur in the labels.
  double mean_accuracy = 0.0;
};

Metrics compute_metrics(const std::vector<std::size_t>& labels,
                        const std::vector<std::size_t>& predicted, std::size_t num_classes);

}  // namespace prnn
