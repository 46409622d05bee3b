#pragma once

#include "ordlab/metrics.hpp"
#include "ordlab/train.hpp"

namespace ordlab {

enum class ScorerKind { sample_loss, max_loss_delta_same, max_loss_delta_external };
enum class DeltaMode { absolute, relative };
enum class StrategyKind { order_ascending, order_descending, sample_direct, sample_inverse };
enum class RescorePolicy { per_step, per_epoch };
enum class ItemKind { batch, single };

// A sample or mini-batch paired with its position in the active dataset.
struct LearningItem {
  ItemKind kind = ItemKind::batch;
  int id = 0;
  std::vector<int> indices;
};

struct ScoreRecord {
  int item_id = 0;
  double score = 0.0;
  int64_t scored_at_step = 0;
};

struct LoaderConfig {
  ScorerKind scorer = ScorerKind::sample_loss;
  DeltaMode delta_mode = DeltaMode::absolute;
  StrategyKind strategy = StrategyKind::order_ascending;
  RescorePolicy rescore = RescorePolicy::per_step;
  ItemKind item_kind = ItemKind::batch;
  int kappa = 8;
  int external_size = 512;
  bool resample_per_epoch = true;
  double epsilon = 1e-8;  // weight smoothing for the sampler strategies
};

// Loss of the item under current parameters; model state untouched.
double score_sample_loss(Trainer& tr, const LearningItem& item);

// Trial update with the item, reference loss delta, then bitwise rollback of
// parameters and velocities. reference: nullptr scores against the item's own
// batch; otherwise indices into the test dataset.
double score_max_loss_delta(Trainer& tr, const LearningItem& item, const std::vector<int>* reference,
                            DeltaMode mode);

// Seeded uniform sample without replacement from the test dataset.
std::vector<int> make_external_reference(const Dataset& test_ds, int size, uint64_t seed);

// kappa distinct ids drawn uniformly without replacement. The first draw uses
// the same discipline as pick_uniform_remaining, which is what makes a
// kappa=1 ordering run replay the plain loop exactly.
std::vector<int> select_candidates(const std::vector<int>& pool, int kappa, Rng& rng);

// Minimum (ascending) or maximum (descending) score wins; ties by lowest id.
int order_next(const std::vector<ScoreRecord>& scores, bool ascending);

// Weighted draw with replacement: direct p ~ s + eps, inverse p ~ 1/(s + eps).
std::vector<int> sample_items(const std::vector<ScoreRecord>& scores, bool inverse, double epsilon,
                              Rng& rng, int count);

struct PoaRunConfig {
  TrainSettings train;
  PreprocessConfig pre;
  LoaderConfig loader;
};

MetricsLog run_poa_training(const ModelSpec& spec, const PoaRunConfig& cfg, const Dataset& train_ds,
                            const Dataset& test_ds);

// Baseline: same splits, same uniform-from-remaining visit order, no scoring.
MetricsLog run_plain_training(const ModelSpec& spec, const TrainSettings& settings,
                              const PreprocessConfig& pre, const Dataset& train_ds, const Dataset& test_ds,
                              Checkpoint* final_state = nullptr);

}  // namespace ordlab
