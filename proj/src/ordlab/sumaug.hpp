#pragma once

#include <span>

#include "ordlab/bigint.hpp"
#include "ordlab/metrics.hpp"
#include "ordlab/train.hpp"

namespace ordlab {

// Interpolation weights for n sum groups at progress t: n-k-1 raised entries,
// one decaying entry, k trailing zeros, k = floor(t * (n - 1)). Nonnegative,
// sums to 1.
struct CoefficientVector {
  int n = 1;
  double t = 0.0;
  int eliminated = 0;  // k
  std::vector<double> weights;
};

// The Gradually Cascading Coefficient function. n >= 1, t in [0,1]. The
// n-k == 1 case (including t = 1) is the one-hot vector (1, 0, ..., 0); the
// centroid expression degenerates there.
CoefficientVector gcc(int n, double t);

template <class S>
struct MixedBatchT {
  TensorT<S> inputs;        // floor(m/K) mixed samples
  TensorT<S> soft_targets;  // floor(m/K) x num_classes
  int group_count = 1;
};

using MixedBatch = MixedBatchT<float>;

namespace mix_detail {

template <class S>
void check_mix_args(const TensorT<S>& batch, std::span<const int> labels, size_t k, int num_classes) {
  if (k < 1) fail(ErrorKind::invalid_argument, "mix: K must be >= 1");
  const size_t m = batch.extent(0);
  if (m % k != 0)
    fail(ErrorKind::invalid_argument,
         "mix: K=" + std::to_string(k) + " must divide the batch size " + std::to_string(m));
  if (labels.size() != m) fail(ErrorKind::invalid_argument, "mix: label count mismatch");
  for (int label : labels)
    if (label < 0 || label >= num_classes) fail(ErrorKind::invalid_argument, "mix: label out of range");
}

template <class S>
std::vector<size_t> mixed_shape(const TensorT<S>& batch, size_t groups) {
  std::vector<size_t> shape = batch.shape();
  shape[0] = batch.extent(0) / groups;
  return shape;
}

}  // namespace mix_detail

// Split the batch into K equal groups; output i is the mean of the K samples
// at position i of each group, target entry for class l is (members with
// label l) / K.
template <class S>
MixedBatchT<S> mix_batch_average(const TensorT<S>& batch, std::span<const int> labels, int k,
                                 int num_classes) {
  mix_detail::check_mix_args(batch, labels, static_cast<size_t>(k), num_classes);
  const size_t m = batch.extent(0);
  const size_t groups = static_cast<size_t>(k);
  const size_t g = m / groups;
  const size_t sample_len = batch.size() / m;
  MixedBatchT<S> out;
  out.group_count = k;
  out.inputs = TensorT<S>(mix_detail::mixed_shape(batch, groups));
  out.soft_targets = TensorT<S>({g, static_cast<size_t>(num_classes)});
  const S inv_k = static_cast<S>(1.0 / static_cast<double>(k));
  for (size_t i = 0; i < g; ++i) {
    S* dst = out.inputs.data() + i * sample_len;
    for (size_t j = 0; j < groups; ++j) {
      const S* src = batch.data() + (i + j * g) * sample_len;
      if (j == 0)
        std::copy_n(src, sample_len, dst);
      else
        for (size_t p = 0; p < sample_len; ++p) dst[p] += src[p];
    }
    for (size_t p = 0; p < sample_len; ++p) dst[p] *= inv_k;
    std::vector<int> counts(static_cast<size_t>(num_classes), 0);
    for (size_t j = 0; j < groups; ++j) ++counts[static_cast<size_t>(labels[i + j * g])];
    S* trow = out.soft_targets.data() + i * static_cast<size_t>(num_classes);
    for (int c = 0; c < num_classes; ++c)
      trow[c] = static_cast<S>(static_cast<double>(counts[static_cast<size_t>(c)]) /
                               static_cast<double>(k));
  }
  return out;
}

// Coefficient-weighted sum across groups: output i = sum_j C[j] *
// batch[i + j*floor(m/K)], class mass C[j] contributed by group j's label.
// Groups with a zero coefficient contribute nothing.
template <class S>
MixedBatchT<S> mix_batch_weighted(const TensorT<S>& batch, std::span<const int> labels,
                                  std::span<const double> coeffs, int num_classes) {
  const size_t groups = coeffs.size();
  mix_detail::check_mix_args(batch, labels, groups, num_classes);
  const size_t m = batch.extent(0);
  const size_t g = m / groups;
  const size_t sample_len = batch.size() / m;
  MixedBatchT<S> out;
  out.group_count = static_cast<int>(groups);
  out.inputs = TensorT<S>(mix_detail::mixed_shape(batch, groups));
  out.soft_targets = TensorT<S>({g, static_cast<size_t>(num_classes)});
  for (size_t i = 0; i < g; ++i) {
    S* dst = out.inputs.data() + i * sample_len;
    std::vector<double> mass(static_cast<size_t>(num_classes), 0.0);
    for (size_t j = 0; j < groups; ++j) {
      const S c = static_cast<S>(coeffs[j]);
      const S* src = batch.data() + (i + j * g) * sample_len;
      if (j == 0)
        for (size_t p = 0; p < sample_len; ++p) dst[p] = c * src[p];
      else if (coeffs[j] != 0.0)
        for (size_t p = 0; p < sample_len; ++p) dst[p] += c * src[p];
      mass[static_cast<size_t>(labels[i + j * g])] += coeffs[j];
    }
    S* trow = out.soft_targets.data() + i * static_cast<size_t>(num_classes);
    for (int c = 0; c < num_classes; ++c) trow[c] = static_cast<S>(mass[static_cast<size_t>(c)]);
  }
  return out;
}

enum class CoeffSource { average, beta, uniform };

// Nonnegative, normalized to sum 1. beta draws are Beta(alpha, alpha).
std::vector<double> sample_coefficients(int k, CoeffSource source, double alpha, Rng& rng);

BigUint domain_size(uint64_t dataset_size, uint64_t k);
BigUint total_domain_size(uint64_t dataset_size, uint64_t k);

struct CascadeConfig {
  int start_k = 4;           // power of two dividing the batch size
  int patience_steps = 300;  // plateau: no test-loss improvement > min_delta
  double min_delta = 1e-4;
  int max_epochs_per_stage = 50;
  int stop_k = 1;  // last stage to train; 2 keeps a mixed-data model for TTA
};

struct GradualConfig {
  int n = 4;  // initial K, divides the batch size
  int nr_epochs = 8;
  int nr_finetune_epochs = 2;
};

struct SumaugRunResult {
  MetricsLog log;
  Checkpoint final_state;
  std::vector<std::string> stage_best_hashes;
};

// Train at K, keep the best-test-accuracy checkpoint, on plateau transfer the
// best weights and halve K; the K=1 stage fine-tunes on the original data.
SumaugRunResult run_cascade(const ModelSpec& spec, const TrainSettings& settings,
                            const PreprocessConfig& pre, const CascadeConfig& cfg,
                            const Dataset& train_ds, const Dataset& test_ds);

// Epoch e trains with gcc(n, min(e * t_step, 1)) weighted mixing,
// t_step = 1/nr_epochs, then fine-tunes on unmixed data.
SumaugRunResult run_gradual_cascade(const ModelSpec& spec, const TrainSettings& settings,
                                    const PreprocessConfig& pre, const GradualConfig& cfg,
                                    const Dataset& train_ds, const Dataset& test_ds);

}  // namespace ordlab
