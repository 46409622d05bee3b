#include "ordlab/sumaug.hpp"

#include <cmath>

namespace ordlab {

CoefficientVector gcc(int n, double t) {
  if (n < 1) fail(ErrorKind::invalid_argument, "gcc: n must be >= 1");
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::invalid_argument, "gcc: t outside [0,1]");
  CoefficientVector out;
  out.n = n;
  out.t = t;
  const int k = static_cast<int>(std::floor(t * static_cast<double>(n - 1)));
  out.eliminated = k;
  out.weights.assign(static_cast<size_t>(n), 0.0);
  if (n - k == 1) {
    // centroid would divide by (n-k)(n-k-1) = 0; the consistent limit is the
    // one-hot vector, i.e. training on the original samples
    out.eliminated = n - 1;
    out.weights[0] = 1.0;
    return out;
  }
  const double nk = static_cast<double>(n - k);
  const double centroid = 1.0 / nk + (t * static_cast<double>(n - 1) - static_cast<double>(k)) /
                                         (nk * (nk - 1.0));
  const double remainer = 1.0 - centroid * (nk - 1.0);
  const double eps = remainer * (t - static_cast<double>(k) / static_cast<double>(n - 1)) /
                     static_cast<double>(n - 1);
  const double raised = centroid + eps / (nk - 1.0);
  for (int i = 0; i < n - k - 1; ++i) out.weights[static_cast<size_t>(i)] = raised;
  out.weights[static_cast<size_t>(n - k - 1)] = remainer - eps;
  return out;
}

std::vector<double> sample_coefficients(int k, CoeffSource source, double alpha, Rng& rng) {
  if (k < 1) fail(ErrorKind::invalid_argument, "sample_coefficients: K must be >= 1");
  std::vector<double> w(static_cast<size_t>(k));
  switch (source) {
    case CoeffSource::average:
      for (auto& v : w) v = 1.0 / static_cast<double>(k);
      return w;
    case CoeffSource::beta:
      if (alpha <= 0.0) fail(ErrorKind::invalid_argument, "sample_coefficients: alpha must be > 0");
      for (auto& v : w) v = rng.beta(alpha, alpha);
      break;
    case CoeffSource::uniform:
      for (auto& v : w) v = rng.uniform();
      break;
  }
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) {
    for (auto& v : w) v = 1.0 / static_cast<double>(k);
    return w;
  }
  for (auto& v : w) v /= total;
  return w;
}

BigUint domain_size(uint64_t dataset_size, uint64_t k) {
  if (k > dataset_size) fail(ErrorKind::invalid_argument, "domain_size: K larger than dataset");
  return BigUint::binomial(dataset_size, k);
}

BigUint total_domain_size(uint64_t dataset_size, uint64_t k) {
  if (k > dataset_size) fail(ErrorKind::invalid_argument, "total_domain_size: K larger than dataset");
  BigUint total(0);
  for (uint64_t j = 1; j <= k; ++j) total.add(BigUint::binomial(dataset_size, j));
  return total;
}

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

struct EpochOutcome {
  double train_loss = 0.0;
  EvalResult test;
  EvalResult train_eval;
};

// One epoch over a strict split, mixing each batch before the update.
// coeffs empty means plain averaging at group_count; group_count 1 is the
// identity (one-hot targets, unmixed inputs). bce_k is the loss divisor,
// which tracks the live group count in gradual mode.
EpochOutcome run_mixed_epoch(Trainer& tr, int group_count, std::span<const double> coeffs, int bce_k,
                             int64_t global_epoch) {
  const Dataset& train_ds = tr.train_dataset();
  auto split = batch_split(train_ds.size(), tr.settings().batch_size,
                           derive_seed(tr.settings().seed, "split", static_cast<uint64_t>(global_epoch)),
                           /*strict=*/true);
  std::vector<int> remaining(split.size());
  for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);
  double loss_sum = 0.0;
  size_t steps = 0;
  while (!remaining.empty()) {
    const int b = pick_uniform_remaining(remaining, tr.rng());
    Tensor inputs = tr.prepare_train_batch(split[static_cast<size_t>(b)]);
    std::vector<int> labels = gather_labels(train_ds, split[static_cast<size_t>(b)]);
    double loss;
    if (group_count <= 1 && coeffs.empty()) {
      loss = tr.step_bce(inputs, one_hot_targets(labels, tr.model().num_classes()), bce_k);
    } else if (coeffs.empty()) {
      MixedBatch mixed = mix_batch_average(inputs, labels, group_count, tr.model().num_classes());
      loss = tr.step_bce(mixed.inputs, mixed.soft_targets, bce_k);
    } else {
      MixedBatch mixed = mix_batch_weighted(inputs, labels, coeffs, tr.model().num_classes());
      loss = tr.step_bce(mixed.inputs, mixed.soft_targets, bce_k);
    }
    loss_sum += loss;
    ++steps;
    if (tr.diverged()) break;
  }
  EpochOutcome out;
  out.train_loss = loss_sum / static_cast<double>(std::max<size_t>(steps, 1));
  out.test = tr.evaluate_test();
  out.train_eval = tr.evaluate_train();
  return out;
}

MetricsRow make_row(Trainer& tr, const EpochOutcome& o, int k_current, double t) {
  MetricsRow row = tr.metrics_row(o.train_loss);
  row.train_acc = o.train_eval.acc;
  row.test_loss = o.test.loss;
  row.test_acc = o.test.acc;
  row.k_current = k_current;
  row.t = t;
  return row;
}

}  // namespace

SumaugRunResult run_cascade(const ModelSpec& spec, const TrainSettings& settings,
                            const PreprocessConfig& pre, const CascadeConfig& cfg,
                            const Dataset& train_ds, const Dataset& test_ds) {
  if (!is_power_of_two(cfg.start_k))
    fail(ErrorKind::invalid_argument, "cascade: start_K must be a power of two");
  if (settings.batch_size % cfg.start_k != 0)
    fail(ErrorKind::invalid_argument, "cascade: start_K must divide the batch size");
  if (cfg.stop_k < 1 || cfg.stop_k > cfg.start_k || !is_power_of_two(cfg.stop_k))
    fail(ErrorKind::invalid_argument, "cascade: stop_K must be a power of two in [1, start_K]");
  TrainSettings s = settings;
  s.loss = LossKind::bce;
  SumaugRunResult result;
  Trainer tr(spec, s, pre, &train_ds, &test_ds);

  int64_t global_epoch = 0;
  int k = cfg.start_k;
  for (;;) {
    result.log.event(global_epoch, tr.step(), "stage_start", "K=" + std::to_string(k));
    double best_acc = -1.0;
    Checkpoint best_cp = tr.snapshot_state();
    std::string best_hash = best_cp.content_hash_hex();
    double best_loss = 0.0;
    bool loss_seen = false;
    int64_t last_improve_step = tr.step();
    bool plateaued = false;

    for (int se = 0; se < cfg.max_epochs_per_stage && !plateaued; ++se) {
      tr.set_epoch(global_epoch + 1);
      EpochOutcome o = run_mixed_epoch(tr, k, {}, k, global_epoch);
      ++global_epoch;
      result.log.add(make_row(tr, o, k, k == 1 ? 1.0 : 0.0));
      if (tr.diverged()) {
        result.log.event(global_epoch, tr.step(), "divergence", "non-finite training loss");
        plateaued = true;
        break;
      }
      if (o.test.acc > best_acc) {
        best_acc = o.test.acc;
        best_cp = tr.snapshot_state();
        best_hash = best_cp.content_hash_hex();
        result.log.event(global_epoch, tr.step(), "best_checkpoint",
                         "K=" + std::to_string(k) + ";acc=" + format_double(best_acc) + ";hash=" + best_hash);
      }
      if (!loss_seen || o.test.loss < best_loss - cfg.min_delta) {
        best_loss = o.test.loss;
        loss_seen = true;
        last_improve_step = tr.step();
      } else if (tr.step() - last_improve_step >= cfg.patience_steps) {
        plateaued = true;
      }
      tr.maybe_schedule_lr_plateau(o.test.loss);
    }

    // weight transfer from the stage's best checkpoint; counters and the rng
    // stream keep moving forward
    auto params = tr.model().params();
    for (size_t i = 0; i < params.size(); ++i) *params[i] = best_cp.params[i];
    tr.optimizer().velocity = best_cp.velocity;
    result.stage_best_hashes.push_back(best_hash);
    result.log.event(global_epoch, tr.step(), "stage_transition",
                     "K=" + std::to_string(k) + ";best_acc=" + format_double(best_acc) +
                         ";best_state=" + state_hash(best_cp) +
                         ";reloaded_state=" + state_hash(tr.model(), tr.optimizer()));
    if (k == cfg.stop_k || tr.diverged()) break;
    k /= 2;
  }
  result.final_state = tr.snapshot_state();
  return result;
}

SumaugRunResult run_gradual_cascade(const ModelSpec& spec, const TrainSettings& settings,
                                    const PreprocessConfig& pre, const GradualConfig& cfg,
                                    const Dataset& train_ds, const Dataset& test_ds) {
  if (cfg.n < 1) fail(ErrorKind::invalid_argument, "gradual: n must be >= 1");
  if (cfg.nr_epochs < 1) fail(ErrorKind::invalid_argument, "gradual: nr_epochs must be >= 1");
  if (settings.batch_size % cfg.n != 0)
    fail(ErrorKind::invalid_argument, "gradual: n must divide the batch size");
  TrainSettings s = settings;
  s.loss = LossKind::bce;
  SumaugRunResult result;
  Trainer tr(spec, s, pre, &train_ds, &test_ds);

  const double t_step = 1.0 / static_cast<double>(cfg.nr_epochs);
  int64_t global_epoch = 0;
  for (int e = 0; e < cfg.nr_epochs; ++e) {
    const double t = std::min(static_cast<double>(e) * t_step, 1.0);
    CoefficientVector coeffs = gcc(cfg.n, t);
    const int k_eff = cfg.n - coeffs.eliminated;  // live group count, for the K_current column
    tr.set_epoch(global_epoch + 1);
    // the loss divisor stays at n for the whole schedule: the coefficients
    // evolve continuously, so the gradient scale must not jump with k
    EpochOutcome o = run_mixed_epoch(tr, cfg.n, std::span<const double>(coeffs.weights), cfg.n,
                                     global_epoch);
    ++global_epoch;
    result.log.add(make_row(tr, o, k_eff, t));
    if (tr.diverged()) {
      result.log.event(global_epoch, tr.step(), "divergence", "non-finite training loss");
      result.final_state = tr.snapshot_state();
      return result;
    }
  }
  result.log.event(global_epoch, tr.step(), "finetune_start", "t=1");
  for (int e = 0; e < cfg.nr_finetune_epochs; ++e) {
    tr.set_epoch(global_epoch + 1);
    EpochOutcome o = run_mixed_epoch(tr, 1, {}, cfg.n, global_epoch);
    ++global_epoch;
    result.log.add(make_row(tr, o, 1, 1.0));
    if (tr.diverged()) {
      result.log.event(global_epoch, tr.step(), "divergence", "non-finite training loss");
      break;
    }
  }
  result.final_state = tr.snapshot_state();
  return result;
}

}  // namespace ordlab
