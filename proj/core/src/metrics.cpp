#include "prnn/metrics.hpp"

#include "prnn/errors.hpp"

namespace prnn {

std::size_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

Metrics compute_metrics(const std::vector<std::size_t>& labels,
                        const std::vector<std::size_t>& predicted, std::size_t num_classes) {
  if (labels.size() != predicted.size()) {
    throw DimensionError("compute_metrics: label and prediction counts differ");
  }
  Metrics m;
  m.num_classes = num_classes;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predicted[i] >= num_classes) {
      throw ValidationError("compute_metrics: class index out of range");
    }
    ++m.confusion[labels[i]][predicted[i]];
  }
  m.per_class_accuracy.assign(num_classes, 0.0);
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t row = 0;
    for (auto c : m.confusion[k]) row += c;
    if (row == 0) continue;
    m.per_class_accuracy[k] = static_cast<double>(m.confusion[k][k]) / static_cast<double>(row);
    total += m.per_class_accuracy[k];
    ++present;
  }
  m.mean_accuracy = present ? total / static_cast<double>(present) : 0.0;
  return m;
}

}  // namespace prnn
