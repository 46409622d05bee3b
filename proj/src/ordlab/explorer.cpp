#include "ordlab/explorer.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "ordlab/kmeans.hpp"
#include "ordlab/metrics.hpp"

namespace ordlab {

BigUint count_orderings(uint64_t n, uint64_t b) {
  if (b == 0 || n % b != 0)
    fail(ErrorKind::invalid_argument,
         "count_orderings: batch size " + std::to_string(b) + " must divide " + std::to_string(n));
  return BigUint::factorial(n / b);
}

BigUint total_iterations(const BigUint& perms_per_epoch, uint64_t clusters, uint64_t epochs) {
  if (epochs < 1) fail(ErrorKind::invalid_argument, "total_iterations: epochs must be >= 1");
  BigUint total = perms_per_epoch;
  BigUint later = perms_per_epoch;
  later.mul_small(clusters);
  later.mul_small(epochs - 1);
  total.add(later);
  return total;
}

PermutationRun run_epoch_permutation(const ModelSpec& spec, const TrainSettings& settings,
                                     const PreprocessConfig& pre, const Dataset& train_ds,
                                     const Dataset& test_ds, const Checkpoint& parent,
                                     const std::string& parent_hash,
                                     const std::vector<std::vector<int>>& batches,
                                     const std::vector<int>& permutation) {
  Trainer tr(spec, settings, pre, &train_ds, &test_ds);
  tr.restore_state(parent);
  for (int b : permutation) tr.step_ce(batches[static_cast<size_t>(b)]);
  EvalResult test = tr.evaluate_test();
  PermutationRun run;
  run.permutation = permutation;
  run.test_loss = test.loss;
  run.test_acc = test.acc;
  run.parent_hash = parent_hash;
  run.checkpoint = std::make_shared<Checkpoint>(tr.snapshot_state());
  run.checkpoint_hash = run.checkpoint->content_hash_hex();
  return run;
}

std::vector<size_t> kmeans_select_by_test_loss(const std::vector<PermutationRun>& runs, int clusters,
                                               uint64_t seed) {
  if (runs.empty()) fail(ErrorKind::invalid_argument, "kmeans_select: no runs");
  std::vector<double> losses;
  losses.reserve(runs.size());
  for (const auto& r : runs) losses.push_back(r.test_loss);
  std::set<double> distinct(losses.begin(), losses.end());

  std::vector<size_t> reps;
  if (static_cast<int>(distinct.size()) < clusters) {
    for (double loss : distinct) {
      size_t best = runs.size();
      for (size_t i = 0; i < runs.size(); ++i)
        if (runs[i].test_loss == loss && (best == runs.size() || runs[i].run_id < runs[best].run_id))
          best = i;
      reps.push_back(best);
    }
  } else {
    Kmeans1D km = kmeans_1d(losses, clusters, seed);
    for (int c = 0; c < clusters; ++c) {
      size_t best = runs.size();
      double best_d = 0.0;
      for (size_t i = 0; i < runs.size(); ++i) {
        if (km.assignment[i] != c) continue;
        const double d = std::abs(losses[i] - km.centroids[static_cast<size_t>(c)]);
        if (best == runs.size() || d < best_d || (d == best_d && runs[i].run_id < runs[best].run_id)) {
          best = i;
          best_d = d;
        }
      }
      if (best != runs.size()) reps.push_back(best);
    }
  }
  std::sort(reps.begin(), reps.end(),
            [&](size_t a, size_t b) { return runs[a].run_id < runs[b].run_id; });
  return reps;
}

namespace {

std::vector<std::vector<int>> all_permutations(int count) {
  std::vector<int> order(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<size_t>(i)] = i;
  std::vector<std::vector<int>> perms;
  do {
    perms.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));
  return perms;
}

EpochDistribution summarize(int epoch, const std::vector<PermutationRun>& runs, size_t begin, size_t end) {
  EpochDistribution d;
  d.epoch = epoch;
  d.run_count = static_cast<int>(end - begin);
  d.min_acc = d.max_acc = runs[begin].test_acc;
  d.min_loss = d.max_loss = runs[begin].test_loss;
  double acc_sum = 0.0;
  for (size_t i = begin; i < end; ++i) {
    const auto& r = runs[i];
    d.min_acc = std::min(d.min_acc, r.test_acc);
    d.max_acc = std::max(d.max_acc, r.test_acc);
    d.min_loss = std::min(d.min_loss, r.test_loss);
    d.max_loss = std::max(d.max_loss, r.test_loss);
    acc_sum += r.test_acc;
  }
  d.mean_acc = acc_sum / static_cast<double>(d.run_count);
  return d;
}

}  // namespace

ExplorerResult explore(const ModelSpec& spec, const Dataset& train_ds, const Dataset& test_ds,
                       const ExplorerConfig& cfg) {
  const size_t n = train_ds.size();
  const uint64_t b = static_cast<uint64_t>(cfg.train.batch_size);
  BigUint perms_count = count_orderings(n, b);  // also enforces b | n
  BigUint planned = total_iterations(perms_count, static_cast<uint64_t>(cfg.clusters),
                                     static_cast<uint64_t>(cfg.epochs));
  if (!(planned <= cfg.max_runs))
    fail(ErrorKind::budget, "explore refused: computed run count " + planned.str() +
                                " exceeds the budget of " + std::to_string(cfg.max_runs) + " runs");

  const int nb = static_cast<int>(n / b);
  const auto perms = all_permutations(nb);

  ExplorerResult result;
  Trainer init_tr(spec, cfg.train, cfg.pre, &train_ds, &test_ds);
  auto initial = std::make_shared<Checkpoint>(init_tr.snapshot_state());
  result.initial_hash = initial->content_hash_hex();

  std::vector<std::shared_ptr<Checkpoint>> parents{initial};
  std::vector<std::string> parent_hashes{result.initial_hash};
  int next_run_id = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto batches = batch_split(n, cfg.train.batch_size,
                               derive_seed(cfg.train.seed, "explorer-split", static_cast<uint64_t>(epoch)),
                               /*strict=*/true);
    const size_t jobs = parents.size() * perms.size();
    std::vector<PermutationRun> epoch_runs(jobs);

    const int workers = std::max(1, cfg.workers);
    auto work = [&](int worker_id) {
      for (size_t j = static_cast<size_t>(worker_id); j < jobs; j += static_cast<size_t>(workers)) {
        const size_t parent_idx = j / perms.size();
        const size_t perm_idx = j % perms.size();
        PermutationRun run =
            run_epoch_permutation(spec, cfg.train, cfg.pre, train_ds, test_ds, *parents[parent_idx],
                                  parent_hashes[parent_idx], batches, perms[perm_idx]);
        run.epoch = epoch;
        run.parent_id = static_cast<int>(parent_idx);
        run.run_id = next_run_id + static_cast<int>(j);
        epoch_runs[j] = std::move(run);
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    next_run_id += static_cast<int>(jobs);

    auto reps = kmeans_select_by_test_loss(epoch_runs, cfg.clusters,
                                           derive_seed(cfg.train.seed, "kmeans", static_cast<uint64_t>(epoch)));
    std::vector<std::shared_ptr<Checkpoint>> next_parents;
    std::vector<std::string> next_hashes;
    for (size_t idx : reps) {
      next_parents.push_back(epoch_runs[idx].checkpoint);
      next_hashes.push_back(epoch_runs[idx].checkpoint_hash);
    }
    // retain representative checkpoints only
    std::set<size_t> rep_set(reps.begin(), reps.end());
    for (size_t i = 0; i < epoch_runs.size(); ++i)
      if (!rep_set.count(i)) epoch_runs[i].checkpoint.reset();

    const size_t begin = result.ledger.size();
    for (auto& run : epoch_runs) result.ledger.push_back(std::move(run));
    result.distributions.push_back(summarize(epoch, result.ledger, begin, result.ledger.size()));
    parents = std::move(next_parents);
    parent_hashes = std::move(next_hashes);
  }
  return result;
}

std::string ledger_csv(const ExplorerResult& result) {
  std::string out = "epoch,parent_hash,permutation,test_loss,test_acc,checkpoint_hash\n";
  for (const auto& r : result.ledger) {
    std::string perm;
    for (size_t i = 0; i < r.permutation.size(); ++i)
      perm += (i ? "-" : "") + std::to_string(r.permutation[i]);
    out += std::to_string(r.epoch) + ',' + r.parent_hash + ',' + perm + ',' + format_double(r.test_loss) +
           ',' + format_double(r.test_acc) + ',' + r.checkpoint_hash + '\n';
  }
  return out;
}

std::string distribution_csv(const ExplorerResult& result) {
  std::string out = "epoch,min_acc,mean_acc,max_acc,min_loss,max_loss,run_count\n";
  for (const auto& d : result.distributions) {
    out += std::to_string(d.epoch) + ',' + format_double(d.min_acc) + ',' + format_double(d.mean_acc) +
           ',' + format_double(d.max_acc) + ',' + format_double(d.min_loss) + ',' +
           format_double(d.max_loss) + ',' + std::to_string(d.run_count) + '\n';
  }
  return out;
}

}  // namespace ordlab
