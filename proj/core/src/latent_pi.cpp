#include "prnn/latent_pi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prnn/errors.hpp"

namespace prnn::pi {

namespace {

constexpr double kRowTolerance = 1e-9;

void require_label(std::size_t label, std::size_t k) {
  if (label >= k) {
    throw ValidationError("label " + std::to_string(label) + " out of range for " +
                          std::to_string(k) + " classes");
  }
}

}  // namespace

BridgingMatrix::BridgingMatrix(Tensor m) : m_(std::move(m)) {
  if (m_.rank() != 2 || m_.dim(0) != m_.dim(1)) {
    throw DimensionError("bridging matrix must be square, got " + shape_to_string(m_.shape()));
  }
  for (double v : m_.data()) {
    if (!(v >= 0.0)) throw ValidationError("bridging matrix entries must be >= 0");
  }
  if (max_row_error() > kRowTolerance) {
    throw ValidationError("bridging matrix rows must sum to 1");
  }
}

BridgingMatrix BridgingMatrix::identity(std::size_t k) { return smoothed_identity(k, 0.0); }

BridgingMatrix BridgingMatrix::uniform(std::size_t k) {
  return BridgingMatrix(Tensor({k, k}, 1.0 / static_cast<double>(k)));
}

BridgingMatrix BridgingMatrix::smoothed_identity(std::size_t k, double eps) {
  if (eps < 0.0 || eps > 1.0) throw ValidationError("smoothing must lie in [0, 1]");
  Tensor m({k, k}, eps / static_cast<double>(k));
  for (std::size_t i = 0; i < k; ++i) m.at(i, i) += 1.0 - eps;
  return BridgingMatrix(std::move(m));
}

double BridgingMatrix::max_row_error() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < m_.dim(0); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m_.dim(1); ++c) s += m_.at(r, c);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

Tensor estep_latent_pi(const Tensor& logits, std::size_t label, const BridgingMatrix& m) {
  const std::size_t k = m.classes();
  if (logits.rank() != 1 || logits.size() != k) {
    throw DimensionError("estep_latent_pi: logits " + shape_to_string(logits.shape()) +
                         " vs " + std::to_string(k) + " classes");
  }
  require_label(label, k);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    if (m(i, label) > 0.0) mx = std::max(mx, logits[i]);
  }
  if (!std::isfinite(mx)) {
    throw DegeneratePosteriorError("bridging matrix column " + std::to_string(label) +
                                   " is all zero");
  }
  Tensor u({k});
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    u[i] = m(i, label) * std::exp(logits[i] - mx);
    z += u[i];
  }
  for (auto& v : u.data()) v /= z;
  return u;
}

BridgingMatrix mstep_bridging(const std::vector<Tensor>& posteriors,
                              const std::vector<std::size_t>& labels) {
  if (posteriors.empty()) throw ValidationError("mstep_bridging: no sequences");
  if (posteriors.size() != labels.size()) {
    throw DimensionError("mstep_bridging: posterior and label counts differ");
  }
  const std::size_t k = posteriors.front().size();
  Tensor num({k, k});
  std::vector<double> mass(k, 0.0);
  for (std::size_t j = 0; j < posteriors.size(); ++j) {
    const Tensor& u = posteriors[j];
    if (u.size() != k) throw DimensionError("mstep_bridging: posterior sizes differ");
    require_label(labels[j], k);
    for (std::size_t r = 0; r < k; ++r) {
      num.at(r, labels[j]) += u[r];
      mass[r] += u[r];
    }
  }
  for (std::size_t r = 0; r < k; ++r) {
    if (mass[r] > 0.0) {
      for (std::size_t c = 0; c < k; ++c) num.at(r, c) /= mass[r];
    } else {
      for (std::size_t c = 0; c < k; ++c) num.at(r, c) = 1.0 / static_cast<double>(k);
    }
  }
  return BridgingMatrix(std::move(num));
}

Tensor disturbance_probabilities(std::size_t num_classes, std::size_t label, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  require_label(label, num_classes);
  const double kd = static_cast<double>(num_classes);
  Tensor p({num_classes}, alpha / kd);
  p[label] = 1.0 - (kd - 1.0) * alpha / kd;
  return p;
}

DisturbedTarget sample_disturbed_target(const Tensor& posterior, std::size_t label, double alpha,
                                        CounterRng& rng) {
  const std::size_t k = posterior.size();
  const Tensor p = disturbance_probabilities(k, label, alpha);
  const double r = rng.uniform();
  double acc = 0.0;
  std::size_t pick = label;
  for (std::size_t i = 0; i < k; ++i) {
    acc += p[i];
    if (r < acc) {
      pick = i;
      break;
    }
  }
  if (pick == label) return {label, posterior};
  Tensor hot({k});
  hot[pick] = 1.0;
  return {pick, std::move(hot)};
}

double q_loglik(const std::vector<Tensor>& logits, const std::vector<std::size_t>& labels,
                const BridgingMatrix& m) {
  if (logits.size() != labels.size()) throw DimensionError("q_loglik: logit and label counts differ");
  const std::size_t k = m.classes();
  double q = 0.0;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const Tensor& s = logits[j];
    if (s.size() != k) throw DimensionError("q_loglik: logits do not match bridging matrix");
    require_label(labels[j], k);
    // log sum_k exp(s_k + log M_kg) - log sum_k exp(s_k)
    double mx_all = neg_inf, mx_joint = neg_inf;
    for (std::size_t i = 0; i < k; ++i) {
      mx_all = std::max(mx_all, s[i]);
      if (m(i, labels[j]) > 0.0) mx_joint = std::max(mx_joint, s[i] + std::log(m(i, labels[j])));
    }
    if (!std::isfinite(mx_joint)) return neg_inf;
    double z_all = 0.0, z_joint = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      z_all += std::exp(s[i] - mx_all);
      if (m(i, labels[j]) > 0.0) z_joint += std::exp(s[i] + std::log(m(i, labels[j])) - mx_joint);
    }
    q += (mx_joint + std::log(z_joint)) - (mx_all + std::log(z_all));
  }
  return q;
}

}  // namespace prnn::pi
