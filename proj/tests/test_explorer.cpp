#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ordlab/explorer.hpp"
#include "ordlab/kmeans.hpp"
#include "support/oracles.hpp"

using namespace ordlab;

namespace {

ExplorerConfig micro_config(int epochs, int workers = 1) {
  ExplorerConfig cfg;
  cfg.epochs = epochs;
  cfg.clusters = 12;
  cfg.workers = workers;
  cfg.train.batch_size = 4;
  cfg.train.seed = 5;
  cfg.train.epochs = 1;
  return cfg;
}

ModelSpec blob_mlp() {
  ModelSpec spec;
  spec.arch = MlpSpec{{6}, Activation::relu};
  spec.input_shape = {4};
  spec.num_classes = 2;
  return spec;
}

}  // namespace

TEST_CASE("count_orderings: paper counts and divisibility errors") {
  CHECK(count_orderings(48, 8).str() == "720");
  CHECK(count_orderings(12, 4).str() == "6");
  CHECK(count_orderings(8, 8).str() == "1");
  CHECK_THROWS_AS((void)count_orderings(10, 4), Error);
}

TEST_CASE("total_iterations: paper count, single epoch, small case") {
  CHECK(total_iterations(BigUint(720), 12, 13).str() == "104400");
  CHECK(total_iterations(BigUint(720), 12, 1).str() == "720");
  CHECK(total_iterations(BigUint(24), 12, 2).str() == "312");
}

TEST_CASE("kmeans_1d matches the independently written oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> values;
    const size_t n = 10 + rng.uniform_index(40);
    for (size_t i = 0; i < n; ++i) values.push_back(rng.uniform() * 10.0);
    const int k = 1 + static_cast<int>(rng.uniform_index(6));
    const uint64_t seed = trial;
    Kmeans1D impl = kmeans_1d(values, k, seed);
    testing::OracleKmeans oracle = testing::oracle_kmeans_1d(values, k, seed);
    REQUIRE(impl.centroids.size() == oracle.centroids.size());
    for (size_t c = 0; c < impl.centroids.size(); ++c)
      CHECK(impl.centroids[c] == doctest::Approx(oracle.centroids[c]).epsilon(1e-9));
    CHECK(impl.assignment == oracle.assignment);
  }
}

TEST_CASE("kmeans_select: 24 runs with losses 1..24 give 12 representatives") {
  std::vector<PermutationRun> runs(24);
  for (int i = 0; i < 24; ++i) {
    runs[static_cast<size_t>(i)].run_id = i;
    runs[static_cast<size_t>(i)].test_loss = static_cast<double>(i + 1);
  }
  auto reps = kmeans_select_by_test_loss(runs, 12, 3);
  CHECK(reps.size() == 12);
  std::set<size_t> unique(reps.begin(), reps.end());
  CHECK(unique.size() == 12);
}

TEST_CASE("kmeans_select: degenerate cases") {
  std::vector<PermutationRun> runs(5);
  for (int i = 0; i < 5; ++i) {
    runs[static_cast<size_t>(i)].run_id = i;
    runs[static_cast<size_t>(i)].test_loss = 2.5;  // all identical
  }
  auto reps = kmeans_select_by_test_loss(runs, 12, 1);
  CHECK(reps.size() == 1);
  CHECK(runs[reps[0]].run_id == 0);

  // clusters=1: the run nearest the mean loss
  std::vector<PermutationRun> spread(4);
  const double losses[4] = {0.0, 1.0, 2.0, 7.0};  // mean 2.5, nearest is 2.0
  for (int i = 0; i < 4; ++i) {
    spread[static_cast<size_t>(i)].run_id = i;
    spread[static_cast<size_t>(i)].test_loss = losses[i];
  }
  auto one = kmeans_select_by_test_loss(spread, 1, 9);
  REQUIRE(one.size() == 1);
  CHECK(spread[one[0]].test_loss == 2.0);
}

TEST_CASE("run_epoch_permutation: identity permutation twice from one parent is bitwise equal") {
  Dataset train = synthetic_blobs(2, 8, 4, 4.0, 60, 61);
  Dataset test = synthetic_blobs(2, 8, 4, 4.0, 60, 62);
  ModelSpec spec = blob_mlp();
  TrainSettings settings;
  settings.batch_size = 4;
  settings.seed = 5;
  PreprocessConfig pre;
  Trainer t0(spec, settings, pre, &train, &test);
  Checkpoint parent = t0.snapshot_state();
  const std::string parent_hash = parent.content_hash_hex();
  auto batches = batch_split(train.size(), 4, 77, true);
  std::vector<int> identity{0, 1, 2, 3};
  PermutationRun a =
      run_epoch_permutation(spec, settings, pre, train, test, parent, parent_hash, batches, identity);
  PermutationRun b =
      run_epoch_permutation(spec, settings, pre, train, test, parent, parent_hash, batches, identity);
  CHECK(a.test_loss == b.test_loss);
  CHECK(a.test_acc == b.test_acc);
  CHECK(a.checkpoint_hash == b.checkpoint_hash);
  CHECK(parent.content_hash_hex() == parent_hash);  // parent untouched

  std::vector<int> other{3, 2, 1, 0};
  PermutationRun c =
      run_epoch_permutation(spec, settings, pre, train, test, parent, parent_hash, batches, other);
  CHECK(c.checkpoint_hash != a.checkpoint_hash);  // distinct runs recorded independently
}

TEST_CASE("explore: 16 samples at b=4 for 1 epoch enumerates exactly 24 runs") {
  Dataset train = synthetic_blobs(2, 8, 4, 4.0, 60, 61);
  Dataset test = synthetic_blobs(2, 8, 4, 4.0, 60, 62);
  ExplorerResult result = explore(blob_mlp(), train, test, micro_config(1));
  CHECK(result.ledger.size() == 24);
  for (const auto& run : result.ledger) CHECK(run.parent_hash == result.initial_hash);
  REQUIRE(result.distributions.size() == 1);
  const auto& d = result.distributions[0];
  CHECK(d.run_count == 24);
  CHECK(d.min_acc <= d.mean_acc);
  CHECK(d.mean_acc <= d.max_acc);
  CHECK(d.min_loss <= d.max_loss);
}

TEST_CASE("explore: same config and seed reproduce the ledger; workers do not change it") {
  Dataset train = synthetic_blobs(2, 8, 4, 4.0, 60, 61);
  Dataset test = synthetic_blobs(2, 8, 4, 4.0, 60, 62);
  ExplorerResult serial = explore(blob_mlp(), train, test, micro_config(2, 1));
  ExplorerResult serial2 = explore(blob_mlp(), train, test, micro_config(2, 1));
  ExplorerResult parallel = explore(blob_mlp(), train, test, micro_config(2, 2));
  CHECK(ledger_csv(serial) == ledger_csv(serial2));
  CHECK(ledger_csv(serial) == ledger_csv(parallel));
  CHECK(distribution_csv(serial) == distribution_csv(parallel));
  // epoch 2 fans out: 24 + 12*24 = 312 runs (12 distinct-loss representatives)
  CHECK(serial.ledger.size() <= 24 + 12 * 24);
  CHECK(serial.distributions.size() == 2);
}

TEST_CASE("explore: budget refusal lists the computed run count") {
  Dataset train = synthetic_blobs(2, 14, 4, 4.0, 60, 61);  // 28 samples, b=4 -> 7 batches
  Dataset test = synthetic_blobs(2, 8, 4, 4.0, 60, 62);
  ExplorerConfig cfg = micro_config(1);
  cfg.max_runs = 100;
  try {
    (void)explore(blob_mlp(), train, test, cfg);
    FAIL("expected budget refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::budget);
    CHECK(std::string(e.what()).find("5040") != std::string::npos);
  }
}

TEST_CASE("explore: checkpoints are retained for representatives only") {
  Dataset train = synthetic_blobs(2, 8, 4, 4.0, 60, 61);
  Dataset test = synthetic_blobs(2, 8, 4, 4.0, 60, 62);
  ExplorerResult result = explore(blob_mlp(), train, test, micro_config(1));
  size_t kept = 0;
  for (const auto& run : result.ledger) kept += run.checkpoint != nullptr;
  CHECK(kept <= 12);
  CHECK(kept >= 1);
}
