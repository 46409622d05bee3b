#pragma once

#include <memory>

#include "ordlab/bigint.hpp"
#include "ordlab/checkpoint.hpp"
#include "ordlab/data.hpp"
#include "ordlab/train.hpp"

namespace ordlab {

struct PermutationRun {
  int run_id = 0;
  int epoch = 0;
  int parent_id = 0;             // index into the epoch's parent set
  std::vector<int> permutation;  // bijection over batch indices
  double test_loss = 0.0;
  double test_acc = 0.0;
  std::string parent_hash;
  std::string checkpoint_hash;
  std::shared_ptr<Checkpoint> checkpoint;  // dropped unless the run is a representative
};

struct EpochDistribution {
  int epoch = 0;
  double min_acc = 0.0, mean_acc = 0.0, max_acc = 0.0;
  double min_loss = 0.0, max_loss = 0.0;
  int run_count = 0;
};

// (n/b)! distinct batch orders for one epoch, b | n required.
BigUint count_orderings(uint64_t n, uint64_t b);

// P + clusters * P * (epochs - 1)
BigUint total_iterations(const BigUint& perms_per_epoch, uint64_t clusters, uint64_t epochs);

struct ExplorerConfig {
  int epochs = 1;
  int clusters = 12;
  uint64_t max_runs = 200000;  // refusal budget
  int workers = 1;
  TrainSettings train;
  PreprocessConfig pre;
};

struct ExplorerResult {
  std::vector<PermutationRun> ledger;
  std::vector<EpochDistribution> distributions;
  std::string initial_hash;
};

// One epoch of training from a restorable parent, visiting batches in
// permutation order. The parent is untouched.
PermutationRun run_epoch_permutation(const ModelSpec& spec, const TrainSettings& settings,
                                     const PreprocessConfig& pre, const Dataset& train_ds,
                                     const Dataset& test_ds, const Checkpoint& parent,
                                     const std::string& parent_hash,
                                     const std::vector<std::vector<int>>& batches,
                                     const std::vector<int>& permutation);

// Representative run per test-loss cluster: 1-D Lloyd's, seeded farthest-point
// init, nearest-to-centroid selection with lowest-run-id ties. Fewer clusters
// than requested when the distinct losses run out. Returns indices into runs,
// ascending run id.
std::vector<size_t> kmeans_select_by_test_loss(const std::vector<PermutationRun>& runs, int clusters,
                                               uint64_t seed);

ExplorerResult explore(const ModelSpec& spec, const Dataset& train_ds, const Dataset& test_ds,
                       const ExplorerConfig& cfg);

std::string ledger_csv(const ExplorerResult& result);
std::string distribution_csv(const ExplorerResult& result);

}  // namespace ordlab
