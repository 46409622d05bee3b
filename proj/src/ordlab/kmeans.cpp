#include "ordlab/kmeans.hpp"

#include <cmath>
#include <set>

#include "ordlab/errors.hpp"
#include "ordlab/rng.hpp"

namespace ordlab {

Kmeans1D kmeans_1d(const std::vector<double>& values, int k, uint64_t seed, double tol, int max_iter) {
  const size_t n = values.size();
  if (n == 0) fail(ErrorKind::invalid_argument, "kmeans_1d: empty input");
  std::set<double> distinct(values.begin(), values.end());
  if (k < 1 || static_cast<size_t>(k) > distinct.size())
    fail(ErrorKind::invalid_argument, "kmeans_1d: k must be in [1, distinct values]");

  Rng rng(derive_seed(seed, "kmeans-init"));
  std::vector<double> centroids;
  centroids.push_back(values[rng.uniform_index(n)]);
  while (static_cast<int>(centroids.size()) < k) {
    double best_d = -1.0;
    size_t best_i = 0;
    for (size_t i = 0; i < n; ++i) {
      double d = std::abs(values[i] - centroids[0]);
      for (double c : centroids) d = std::min(d, std::abs(values[i] - c));
      if (d > best_d) {
        best_d = d;
        best_i = i;
      }
    }
    centroids.push_back(values[best_i]);
  }

  Kmeans1D result;
  result.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::abs(values[i] - centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(values[i] - centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      result.assignment[i] = best;
    }
    std::vector<double> sum(k, 0.0);
    std::vector<size_t> count(k, 0);
    for (size_t i = 0; i < n; ++i) {
      sum[result.assignment[i]] += values[i];
      ++count[result.assignment[i]];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // keep the previous centroid
      const double updated = sum[c] / static_cast<double>(count[c]);
      shift = std::max(shift, std::abs(updated - centroids[c]));
      centroids[c] = updated;
    }
    result.iterations = iter + 1;
    if (shift < tol) break;
  }
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace ordlab
