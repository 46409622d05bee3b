#include "ordlab/poa.hpp"

#include <algorithm>

namespace ordlab {

namespace {

// Eval-mode loss of a set of train/test samples under the current weights.
// Consumes no randomness, so scoring stays pure.
double loss_on(Trainer& tr, const Dataset& ds, std::span<const int> indices) {
  Tensor raw = gather_images(ds, indices);
  Tensor inputs = preprocess(raw, tr.preprocess_config(), nullptr, /*train_mode=*/false);
  std::vector<int> labels = gather_labels(ds, indices);
  Tensor logits = tr.model().forward(inputs);
  if (tr.settings().loss == LossKind::softmax_ce) return softmax_cross_entropy(logits, labels).value;
  Tensor targets = one_hot_targets(labels, tr.model().num_classes());
  return mixed_bce_loss(logits, targets, 1).value;
}

struct StateCopy {
  std::vector<Tensor> params;
  std::vector<Tensor> velocity;
};

StateCopy save_state(Trainer& tr) {
  StateCopy s;
  for (auto* p : tr.model().params()) s.params.push_back(*p);
  s.velocity = tr.optimizer().velocity;
  return s;
}

void load_state(Trainer& tr, const StateCopy& s) {
  auto params = tr.model().params();
  for (size_t i = 0; i < params.size(); ++i) *params[i] = s.params[i];
  tr.optimizer().velocity = s.velocity;
}

}  // namespace

double score_sample_loss(Trainer& tr, const LearningItem& item) {
  return loss_on(tr, tr.train_dataset(), item.indices);
}

double score_max_loss_delta(Trainer& tr, const LearningItem& item, const std::vector<int>* reference,
                            DeltaMode mode) {
  const Dataset& ref_ds = reference ? tr.test_dataset() : tr.train_dataset();
  const std::vector<int>& ref_idx = reference ? *reference : item.indices;
  const double prev_loss = loss_on(tr, ref_ds, ref_idx);

  StateCopy before = save_state(tr);
  // trial update: eval-mode preprocessing, no rng draws, no counter movement
  Tensor raw = gather_images(tr.train_dataset(), item.indices);
  Tensor inputs = preprocess(raw, tr.preprocess_config(), nullptr, /*train_mode=*/false);
  std::vector<int> labels = gather_labels(tr.train_dataset(), item.indices);
  Tensor logits = tr.model().forward(inputs);
  if (tr.settings().loss == LossKind::softmax_ce) {
    auto lg = softmax_cross_entropy(logits, labels);
    tr.model().backward(lg.grad);
  } else {
    Tensor targets = one_hot_targets(labels, tr.model().num_classes());
    auto lg = mixed_bce_loss(logits, targets, 1);
    tr.model().backward(lg.grad);
  }
  tr.optimizer().step(tr.model());
  const double new_loss = loss_on(tr, ref_ds, ref_idx);
  load_state(tr, before);

  if (mode == DeltaMode::absolute) return prev_loss - new_loss;
  if (prev_loss == 0.0)
    fail(ErrorKind::invalid_argument, "max_loss_delta: relative mode with zero reference loss");
  return (prev_loss - new_loss) / prev_loss;
}

std::vector<int> make_external_reference(const Dataset& test_ds, int size, uint64_t seed) {
  if (size < 1 || static_cast<size_t>(size) > test_ds.size())
    fail(ErrorKind::invalid_argument, "external reference size " + std::to_string(size) +
                                          " exceeds test set of " + std::to_string(test_ds.size()));
  std::vector<int> idx(test_ds.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  Rng rng(derive_seed(seed, "external-ref"));
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(size));
  return idx;
}

std::vector<int> select_candidates(const std::vector<int>& pool, int kappa, Rng& rng) {
  if (kappa < 1 || static_cast<size_t>(kappa) > pool.size())
    fail(ErrorKind::invalid_argument, "select_candidates: kappa outside [1, pool size]");
  std::vector<int> working = pool;
  std::vector<int> out;
  out.reserve(static_cast<size_t>(kappa));
  for (int i = 0; i < kappa; ++i) out.push_back(pick_uniform_remaining(working, rng));
  return out;
}

int order_next(const std::vector<ScoreRecord>& scores, bool ascending) {
  if (scores.empty()) fail(ErrorKind::invalid_argument, "order_next: empty score list");
  const ScoreRecord* best = &scores.front();
  for (const auto& rec : scores) {
    const bool better = ascending ? rec.score < best->score : rec.score > best->score;
    if (better || (rec.score == best->score && rec.item_id < best->item_id)) best = &rec;
  }
  return best->item_id;
}

std::vector<int> sample_items(const std::vector<ScoreRecord>& scores, bool inverse, double epsilon,
                              Rng& rng, int count) {
  if (scores.empty()) fail(ErrorKind::invalid_argument, "sample_items: empty score list");
  std::vector<double> cumulative;
  cumulative.reserve(scores.size());
  double total = 0.0;
  for (const auto& rec : scores) {
    if (!inverse && rec.score < 0.0)
      fail(ErrorKind::invalid_argument, "sample_items: direct weighting needs nonnegative scores");
    total += inverse ? 1.0 / (rec.score + epsilon) : rec.score + epsilon;
    cumulative.push_back(total);
  }
  std::vector<int> out;
  for (int i = 0; i < count; ++i) {
    const double r = rng.uniform() * total;
    const size_t pos = static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    out.push_back(scores[std::min(pos, scores.size() - 1)].item_id);
  }
  return out;
}

namespace {

std::vector<LearningItem> build_items(const Dataset& ds, int batch_size, ItemKind kind, uint64_t seed,
                                      int64_t epoch) {
  std::vector<LearningItem> items;
  if (kind == ItemKind::single) {
    for (size_t i = 0; i < ds.size(); ++i)
      items.push_back(LearningItem{ItemKind::single, static_cast<int>(i), {static_cast<int>(i)}});
    return items;
  }
  auto split = batch_split(ds.size(), batch_size, derive_seed(seed, "split", static_cast<uint64_t>(epoch)),
                           /*strict=*/false);
  for (size_t b = 0; b < split.size(); ++b)
    items.push_back(LearningItem{ItemKind::batch, static_cast<int>(b), split[b]});
  return items;
}

bool is_ordering(StrategyKind s) {
  return s == StrategyKind::order_ascending || s == StrategyKind::order_descending;
}

}  // namespace

MetricsLog run_poa_training(const ModelSpec& spec, const PoaRunConfig& cfg, const Dataset& train_ds,
                            const Dataset& test_ds) {
  MetricsLog log;
  Trainer tr(spec, cfg.train, cfg.pre, &train_ds, &test_ds);
  const LoaderConfig& loader = cfg.loader;
  if (loader.kappa < 1) fail(ErrorKind::invalid_argument, "poa: kappa must be >= 1");

  std::vector<int> external_ref;
  double epoch_loss_sum = 0.0;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    tr.maybe_schedule_lr_epoch(epoch);
    auto items = build_items(train_ds, cfg.train.batch_size, loader.item_kind, cfg.train.seed, epoch);
    if (static_cast<size_t>(loader.kappa) > items.size())
      fail(ErrorKind::invalid_argument, "poa: kappa exceeds the number of learning items");
    if (loader.scorer == ScorerKind::max_loss_delta_external &&
        (epoch == 0 || loader.resample_per_epoch)) {
      external_ref = make_external_reference(
          test_ds, loader.external_size, derive_seed(cfg.train.seed, "extref", static_cast<uint64_t>(epoch)));
    }

    auto score_item = [&](const LearningItem& item) -> double {
      switch (loader.scorer) {
        case ScorerKind::sample_loss:
          return score_sample_loss(tr, item);
        case ScorerKind::max_loss_delta_same:
          return score_max_loss_delta(tr, item, nullptr, loader.delta_mode);
        case ScorerKind::max_loss_delta_external:
          return score_max_loss_delta(tr, item, &external_ref, loader.delta_mode);
      }
      fail(ErrorKind::runtime, "poa: unknown scorer");
    };

    // per-epoch policy: one scoring sweep, cached for the whole epoch
    std::vector<double> cached_scores(items.size(), 0.0);
    if (loader.rescore == RescorePolicy::per_epoch)
      for (size_t i = 0; i < items.size(); ++i) cached_scores[i] = score_item(items[i]);

    std::vector<int> pool(items.size());
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
    std::vector<int> remaining = pool;
    const size_t steps = items.size();
    epoch_loss_sum = 0.0;

    for (size_t s = 0; s < steps; ++s) {
      const std::vector<int>& source = is_ordering(loader.strategy) ? remaining : pool;
      // the tail of an ordering epoch can hold fewer than kappa items
      const int kappa_eff = static_cast<int>(std::min<size_t>(loader.kappa, source.size()));
      std::vector<int> candidates = select_candidates(source, kappa_eff, tr.rng());

      std::vector<ScoreRecord> records;
      records.reserve(candidates.size());
      for (int id : candidates) {
        const double score = loader.rescore == RescorePolicy::per_epoch ? cached_scores[id]
                                                                        : score_item(items[id]);
        records.push_back(ScoreRecord{id, score, tr.step()});
      }

      int chosen;
      switch (loader.strategy) {
        case StrategyKind::order_ascending:
          chosen = order_next(records, true);
          break;
        case StrategyKind::order_descending:
          chosen = order_next(records, false);
          break;
        case StrategyKind::sample_direct:
          chosen = sample_items(records, false, loader.epsilon, tr.rng(), 1)[0];
          break;
        case StrategyKind::sample_inverse:
          chosen = sample_items(records, true, loader.epsilon, tr.rng(), 1)[0];
          break;
        default:
          fail(ErrorKind::runtime, "poa: unknown strategy");
      }
      if (is_ordering(loader.strategy))
        remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));

      epoch_loss_sum += tr.step_ce(items[chosen].indices);
      if (tr.diverged()) {
        log.event(epoch + 1, tr.step(), "divergence", "non-finite training loss");
        break;
      }
    }

    tr.set_epoch(epoch + 1);
    EvalResult test = tr.evaluate_test();
    EvalResult train_eval = tr.evaluate_train();
    tr.maybe_schedule_lr_plateau(test.loss);
    MetricsRow row = tr.metrics_row(epoch_loss_sum / static_cast<double>(std::max<size_t>(steps, 1)));
    row.train_acc = train_eval.acc;
    row.test_loss = test.loss;
    row.test_acc = test.acc;
    log.add(row);
    if (tr.diverged()) break;
  }
  return log;
}

MetricsLog run_plain_training(const ModelSpec& spec, const TrainSettings& settings,
                              const PreprocessConfig& pre, const Dataset& train_ds, const Dataset& test_ds,
                              Checkpoint* final_state) {
  MetricsLog log;
  Trainer tr(spec, settings, pre, &train_ds, &test_ds);
  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    tr.maybe_schedule_lr_epoch(epoch);
    auto split = batch_split(train_ds.size(), settings.batch_size,
                             derive_seed(settings.seed, "split", static_cast<uint64_t>(epoch)),
                             /*strict=*/false);
    std::vector<int> remaining(split.size());
    for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);
    double loss_sum = 0.0;
    const size_t steps = split.size();
    while (!remaining.empty()) {
      const int b = pick_uniform_remaining(remaining, tr.rng());
      if (settings.loss == LossKind::softmax_ce) {
        loss_sum += tr.step_ce(split[b]);
      } else {
        Tensor inputs = tr.prepare_train_batch(split[b]);
        std::vector<int> labels = gather_labels(train_ds, split[b]);
        loss_sum += tr.step_bce(inputs, one_hot_targets(labels, tr.model().num_classes()), 1);
      }
      if (tr.diverged()) {
        log.event(epoch + 1, tr.step(), "divergence", "non-finite training loss");
        break;
      }
    }
    tr.set_epoch(epoch + 1);
    EvalResult test = tr.evaluate_test();
    EvalResult train_eval = tr.evaluate_train();
    tr.maybe_schedule_lr_plateau(test.loss);
    MetricsRow row = tr.metrics_row(loss_sum / static_cast<double>(std::max<size_t>(steps, 1)));
    row.train_acc = train_eval.acc;
    row.test_loss = test.loss;
    row.test_acc = test.acc;
    log.add(row);
    if (tr.diverged()) break;
  }
  if (final_state) *final_state = tr.snapshot_state();
  return log;
}

}  // namespace ordlab
