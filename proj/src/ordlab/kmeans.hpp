#pragma once

#include <cstdint>
#include <vector>

namespace ordlab {

struct Kmeans1D {
  std::vector<double> centroids;
  std::vector<int> assignment;  // per value, index into centroids
  int iterations = 0;
};

// Lloyd's algorithm over scalars. Seeded farthest-point initialization:
// first center drawn uniformly, then repeatedly the value farthest from the
// chosen set (ties broken by lowest index). Requires k <= distinct(values).
Kmeans1D kmeans_1d(const std::vector<double>& values, int k, uint64_t seed, double tol = 1e-12,
                   int max_iter = 100);

}  // namespace ordlab
