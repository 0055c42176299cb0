#pragma once

#include <cstddef>
#include <vector>

#include "prnn/rng.hpp"
#include "prnn/tensor.hpp"

// Latent-PI expectation-maximization: posterior over classes given the
// secondary-task logits and the label, the closed-form bridging-matrix
// update, the label-disturbance sampler and the model log-likelihood.
namespace prnn::pi {

/// K x K row-stochastic matrix; entry (k, l) models p(label l | secondary class k).
class BridgingMatrix {
 public:
  explicit BridgingMatrix(Tensor m);

  static BridgingMatrix identity(std::size_t k);
  static BridgingMatrix uniform(std::size_t k);
  /// (1 - eps) I + eps / K.
  static BridgingMatrix smoothed_identity(std::size_t k, double eps = 0.1);

  std::size_t classes() const { return m_.dim(0); }
  double operator()(std::size_t k, std::size_t l) const { return m_.at(k, l); }
  const Tensor& tensor() const { return m_; }

  /// Largest |row sum - 1|.
  double max_row_error() const;

 private:
  Tensor m_;
};

/// u_k = M_{k,g} exp(s_k) / sum_l M_{l,g} exp(s_l), max-subtracted.
/// Throws DegeneratePosteriorError when column g of M is all zero.
Tensor estep_latent_pi(const Tensor& logits, std::size_t label, const BridgingMatrix& m);

/// M_{kl} = sum_j u_{jk} [g_j = l] / sum_j u_{jk}. Rows with zero mass become uniform.
BridgingMatrix mstep_bridging(const std::vector<Tensor>& posteriors,
                              const std::vector<std::size_t>& labels);

/// P(g_hat = label) = 1 - (K-1) alpha / K, P(g_hat = l) = alpha / K otherwise.
Tensor disturbance_probabilities(std::size_t num_classes, std::size_t label, double alpha);

struct DisturbedTarget {
  std::size_t sampled_label = 0;
  Tensor target;
};

/// Draws g_hat from the disturbance distribution; returns u when g_hat is the
/// true label and one_hot(g_hat) otherwise.
DisturbedTarget sample_disturbed_target(const Tensor& posterior, std::size_t label, double alpha,
                                        CounterRng& rng);

/// Q = sum_j log sum_k softmax(s_j)_k M_{k, g_j}, via log-sum-exp.
double q_loglik(const std::vector<Tensor>& logits, const std::vector<std::size_t>& labels,
                const BridgingMatrix& m);

}  // namespace prnn::pi
