#include "ordlab/train.hpp"

namespace ordlab {

Trainer::Trainer(const ModelSpec& spec, const TrainSettings& settings, const PreprocessConfig& pre,
                 const Dataset* train_ds, const Dataset* test_ds)
    : spec_(spec), settings_(settings), pre_(pre), train_ds_(train_ds), test_ds_(test_ds) {
  model_ = build_model<float>(spec, settings.seed);
  opt_.lr = settings.lr;
  opt_.momentum = settings.momentum;
  opt_.weight_decay = settings.weight_decay;
  opt_.nesterov = settings.nesterov;
  opt_.attach(model_);
  rng_ = Rng(derive_seed(settings.seed, "train-stream"));
  base_lr_ = settings.lr;
}

Tensor Trainer::prepare_train_batch(std::span<const int> indices) {
  Tensor raw = gather_images(*train_ds_, indices);
  return preprocess(raw, pre_, &rng_, /*train_mode=*/true);
}

double Trainer::apply_step(const Tensor& inputs, LossGrad<float> lg) {
  (void)inputs;
  model_.backward(lg.grad);
  opt_.step(model_);
  ++step_;
  if (!std::isfinite(lg.value)) diverged_ = true;
  return lg.value;
}

double Trainer::step_ce(std::span<const int> indices) {
  Tensor inputs = prepare_train_batch(indices);
  std::vector<int> labels = gather_labels(*train_ds_, indices);
  Tensor logits = model_.forward(inputs);
  auto lg = softmax_cross_entropy(logits, labels);
  return apply_step(inputs, std::move(lg));
}

double Trainer::step_bce(const Tensor& inputs, const Tensor& soft_targets, int group_count) {
  Tensor logits = model_.forward(inputs);
  auto lg = mixed_bce_loss(logits, soft_targets, group_count);
  return apply_step(inputs, std::move(lg));
}

EvalResult Trainer::evaluate(const Dataset& ds) {
  const size_t n = ds.size();
  const size_t chunk = static_cast<size_t>(std::max(1, settings_.eval_batch));
  double loss_sum = 0.0;
  size_t hits = 0;
  for (size_t start = 0; start < n; start += chunk) {
    const size_t end = std::min(n, start + chunk);
    std::vector<int> idx(end - start);
    for (size_t i = start; i < end; ++i) idx[i - start] = static_cast<int>(i);
    Tensor raw = gather_images(ds, idx);
    Tensor inputs = preprocess(raw, pre_, nullptr, /*train_mode=*/false);
    std::vector<int> labels = gather_labels(ds, idx);
    Tensor logits = model_.forward(inputs);
    if (settings_.loss == LossKind::softmax_ce) {
      auto lg = softmax_cross_entropy(logits, labels);
      loss_sum += lg.value * static_cast<double>(idx.size());
    } else {
      Tensor targets = one_hot_targets(labels, model_.num_classes());
      auto lg = mixed_bce_loss(logits, targets, 1);
      loss_sum += lg.value * static_cast<double>(idx.size());
    }
    for (size_t r = 0; r < idx.size(); ++r)
      if (argmax_row(logits, r) == labels[r]) ++hits;
  }
  return EvalResult{loss_sum / static_cast<double>(n), static_cast<double>(hits) / static_cast<double>(n)};
}

void Trainer::maybe_schedule_lr_epoch(int64_t epoch) {
  if (settings_.schedule != LrScheduleKind::halve_every) return;
  if (epoch > 0 && epoch % settings_.lr_halve_every == 0) opt_.lr *= settings_.lr_factor;
}

void Trainer::maybe_schedule_lr_plateau(double test_loss) {
  if (settings_.schedule != LrScheduleKind::plateau) return;
  if (!plateau_init_ || test_loss < plateau_best_ - settings_.lr_min_delta) {
    plateau_best_ = test_loss;
    plateau_init_ = true;
    plateau_last_improve_ = step_;
    return;
  }
  if (step_ - plateau_last_improve_ >= settings_.lr_plateau_patience) {
    opt_.lr *= settings_.lr_factor;
    plateau_last_improve_ = step_;
  }
}

Checkpoint Trainer::snapshot_state() const {
  Trainer& self = const_cast<Trainer&>(*this);
  return snapshot(self.model_, opt_, rng_, step_, epoch_);
}

void Trainer::restore_state(const Checkpoint& cp) {
  restore(cp, model_, opt_, rng_, &step_, &epoch_);
  diverged_ = false;
}

MetricsRow Trainer::metrics_row(double train_loss_hint) {
  MetricsRow row;
  row.epoch = epoch_;
  row.step = step_;
  row.train_loss = train_loss_hint;
  row.l2_norm = l2_norm(model_);
  return row;
}

int pick_uniform_remaining(std::vector<int>& remaining, Rng& rng) {
  const size_t pos = rng.uniform_index(remaining.size());
  const int chosen = remaining[pos];
  remaining.erase(remaining.begin() + static_cast<long>(pos));
  return chosen;
}

Tensor one_hot_targets(std::span<const int> labels, int num_classes) {
  Tensor t({labels.size(), static_cast<size_t>(num_classes)});
  for (size_t r = 0; r < labels.size(); ++r) {
    const int label = labels[r];
    if (label < 0 || label >= num_classes)
      fail(ErrorKind::invalid_argument, "one_hot: label out of range");
    t[r * num_classes + label] = 1.0f;
  }
  return t;
}

}  // namespace ordlab
