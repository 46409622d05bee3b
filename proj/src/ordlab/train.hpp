#pragma once

#include "ordlab/checkpoint.hpp"
#include "ordlab/data.hpp"
#include "ordlab/losses.hpp"
#include "ordlab/metrics.hpp"
#include "ordlab/nn.hpp"
#include "ordlab/optimizer.hpp"

namespace ordlab {

enum class LossKind { softmax_ce, bce };
enum class LrScheduleKind { none, halve_every, plateau };

struct TrainSettings {
  int epochs = 3;
  int batch_size = 8;
  LossKind loss = LossKind::softmax_ce;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  bool nesterov = true;
  LrScheduleKind schedule = LrScheduleKind::none;
  int lr_halve_every = 30;
  int lr_plateau_patience = 300;
  double lr_factor = 0.5;
  double lr_min_delta = 1e-4;
  int eval_batch = 256;
  uint64_t seed = 1;
};

struct EvalResult {
  double loss = 0.0;
  double acc = 0.0;
};

// Serial training state around one model. All in-loop randomness (batch
// picking, augmentation) flows through train_rng so that runs replay exactly
// from a restored checkpoint.
class Trainer {
 public:
  Trainer(const ModelSpec& spec, const TrainSettings& settings, const PreprocessConfig& pre,
          const Dataset* train_ds, const Dataset* test_ds);

  double step_ce(std::span<const int> indices);
  double step_bce(const Tensor& inputs, const Tensor& soft_targets, int group_count);

  // Train-mode preprocessing of a gathered batch, consuming train_rng.
  Tensor prepare_train_batch(std::span<const int> indices);

  EvalResult evaluate(const Dataset& ds);
  EvalResult evaluate_train() { return evaluate(*train_ds_); }
  EvalResult evaluate_test() { return evaluate(*test_ds_); }

  void maybe_schedule_lr_epoch(int64_t epoch);
  void maybe_schedule_lr_plateau(double test_loss);

  Checkpoint snapshot_state() const;
  void restore_state(const Checkpoint& cp);

  MetricsRow metrics_row(double train_loss_hint) ;

  Model& model() { return model_; }
  Sgd& optimizer() { return opt_; }
  Rng& rng() { return rng_; }
  int64_t step() const { return step_; }
  int64_t epoch() const { return epoch_; }
  void set_epoch(int64_t e) { epoch_ = e; }
  bool diverged() const { return diverged_; }
  const TrainSettings& settings() const { return settings_; }
  const PreprocessConfig& preprocess_config() const { return pre_; }
  const Dataset& train_dataset() const { return *train_ds_; }
  const Dataset& test_dataset() const { return *test_ds_; }

 private:
  double apply_step(const Tensor& inputs, LossGrad<float> lg);

  ModelSpec spec_;
  TrainSettings settings_;
  PreprocessConfig pre_;
  const Dataset* train_ds_;
  const Dataset* test_ds_;
  Model model_;
  Sgd opt_;
  Rng rng_;
  int64_t step_ = 0;
  int64_t epoch_ = 0;
  bool diverged_ = false;
  double base_lr_;
  double plateau_best_ = 0.0;
  bool plateau_init_ = false;
  int64_t plateau_last_improve_ = 0;
};

// Removes and returns one index drawn uniformly from the not-yet-consumed
// set. The plain loop and the candidate loader share this draw discipline so
// that a kappa=1 run replays the baseline bit for bit.
int pick_uniform_remaining(std::vector<int>& remaining, Rng& rng);

Tensor one_hot_targets(std::span<const int> labels, int num_classes);

}  // namespace ordlab
