#pragma once

#include <cmath>
#include <span>

#include "ordlab/tensor.hpp"

namespace ordlab {

template <class S>
struct LossGrad {
  double value = 0.0;
  TensorT<S> grad;  // same shape as logits
};

// Mean softmax cross-entropy over the batch. Per-row math runs in double so
// the float-mode values stay well conditioned.
template <class S>
LossGrad<S> softmax_cross_entropy(const TensorT<S>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) fail(ErrorKind::invalid_argument, "softmax_ce: logits must be (m, classes)");
  const size_t m = logits.extent(0), c = logits.extent(1);
  if (labels.size() != m) fail(ErrorKind::invalid_argument, "softmax_ce: label count mismatch");
  LossGrad<S> out;
  out.grad = TensorT<S>({m, c});
  double total = 0.0;
  std::vector<double> p(c);
  for (size_t r = 0; r < m; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<size_t>(label) >= c)
      fail(ErrorKind::invalid_argument, "softmax_ce: label " + std::to_string(label) + " out of range");
    const S* zr = logits.data() + r * c;
    double zmax = static_cast<double>(zr[0]);
    for (size_t j = 1; j < c; ++j) zmax = std::max(zmax, static_cast<double>(zr[j]));
    double sum = 0.0;
    for (size_t j = 0; j < c; ++j) {
      p[j] = std::exp(static_cast<double>(zr[j]) - zmax);
      sum += p[j];
    }
    total += std::log(sum) - (static_cast<double>(zr[label]) - zmax);
    S* gr = out.grad.data() + r * c;
    const double inv = 1.0 / (sum * static_cast<double>(m));
    for (size_t j = 0; j < c; ++j)
      gr[j] = static_cast<S>(p[j] * inv - (static_cast<size_t>(label) == j ? 1.0 / static_cast<double>(m) : 0.0));
  }
  out.value = total / static_cast<double>(m);
  return out;
}

// Row-wise softmax probabilities (the probability head used at test time).
template <class S>
TensorT<S> softmax_probs(const TensorT<S>& logits) {
  const size_t m = logits.extent(0), c = logits.extent(1);
  TensorT<S> probs({m, c});
  for (size_t r = 0; r < m; ++r) {
    const S* zr = logits.data() + r * c;
    double zmax = static_cast<double>(zr[0]);
    for (size_t j = 1; j < c; ++j) zmax = std::max(zmax, static_cast<double>(zr[j]));
    double sum = 0.0;
    for (size_t j = 0; j < c; ++j) sum += std::exp(static_cast<double>(zr[j]) - zmax);
    S* pr = probs.data() + r * c;
    for (size_t j = 0; j < c; ++j) pr[j] = static_cast<S>(std::exp(static_cast<double>(zr[j]) - zmax) / sum);
  }
  return probs;
}

// Per-element sigmoid binary cross-entropy, mean over batch and classes,
// divided by the sum-group count K.
template <class S>
LossGrad<S> mixed_bce_loss(const TensorT<S>& logits, const TensorT<S>& soft_targets, int group_count) {
  if (!logits.same_shape(soft_targets))
    fail(ErrorKind::invalid_argument, "mixed_bce: target shape " + soft_targets.shape_str() +
                                          " does not match logits " + logits.shape_str());
  if (logits.rank() != 2) fail(ErrorKind::invalid_argument, "mixed_bce: logits must be (m, classes)");
  if (group_count < 1) fail(ErrorKind::invalid_argument, "mixed_bce: K must be >= 1");
  const size_t n = logits.size();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(group_count));
  LossGrad<S> out;
  out.grad = TensorT<S>(logits.shape());
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double z = static_cast<double>(logits[i]);
    const double y = static_cast<double>(soft_targets[i]);
    if (y < 0.0 || y > 1.0) fail(ErrorKind::invalid_argument, "mixed_bce: target outside [0,1]");
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
    const double sig = 1.0 / (1.0 + std::exp(-z));
    out.grad[i] = static_cast<S>((sig - y) * scale);
  }
  out.value = total * scale;
  return out;
}

template <class S>
int argmax_row(const TensorT<S>& t, size_t row) {
  const size_t c = t.extent(1);
  const S* p = t.data() + row * c;
  int best = 0;
  for (size_t j = 1; j < c; ++j)
    if (p[j] > p[best]) best = static_cast<int>(j);
  return best;
}

template <class S>
double accuracy(const TensorT<S>& logits, std::span<const int> labels) {
  const size_t m = logits.extent(0);
  size_t hits = 0;
  for (size_t r = 0; r < m; ++r)
    if (argmax_row(logits, r) == labels[r]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(m);
}

}  // namespace ordlab
