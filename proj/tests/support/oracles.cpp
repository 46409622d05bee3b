#include "support/oracles.hpp"

#include <cmath>
#include <filesystem>
#include <set>

namespace ordlab::testing {

double fd_max_rel_error(ModelD& model, const TensorD& inputs,
                        const std::function<LossGrad<double>(const TensorD&)>& loss, double h) {
  TensorD logits = model.forward(inputs);
  LossGrad<double> lg = loss(logits);
  model.backward(lg.grad);
  std::vector<TensorD> analytic;
  for (auto* g : model.grads()) analytic.push_back(*g);

  auto loss_value = [&]() { return loss(model.forward(inputs)).value; };

  double max_rel = 0.0;
  auto params = model.params();
  for (size_t t = 0; t < params.size(); ++t) {
    TensorD& p = *params[t];
    for (size_t i = 0; i < p.size(); ++i) {
      const double original = p[i];
      p[i] = original + h;
      const double plus = loss_value();
      p[i] = original - h;
      const double minus = loss_value();
      p[i] = original;
      const double fd = (plus - minus) / (2.0 * h);
      const double an = analytic[t][i];
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-4});
      max_rel = std::max(max_rel, std::fabs(fd - an) / denom);
    }
  }
  return max_rel;
}

TensorD naive_group_mean(const TensorD& batch, int k) {
  const size_t m = batch.extent(0);
  const size_t groups = static_cast<size_t>(k);
  const size_t g = m / groups;
  const size_t len = batch.size() / m;
  std::vector<size_t> shape = batch.shape();
  shape[0] = g;
  TensorD out(shape);
  for (size_t i = 0; i < g; ++i)
    for (size_t p = 0; p < len; ++p) {
      double acc = 0.0;
      for (size_t j = 0; j < groups; ++j) acc += batch[(i + j * g) * len + p];
      out[i * len + p] = acc / static_cast<double>(k);
    }
  return out;
}

std::vector<double> naive_group_targets(const std::vector<int>& labels, int k, int group,
                                        int num_classes) {
  const size_t g = labels.size() / static_cast<size_t>(k);
  std::vector<double> row(static_cast<size_t>(num_classes), 0.0);
  for (int j = 0; j < k; ++j)
    row[static_cast<size_t>(labels[static_cast<size_t>(group) + static_cast<size_t>(j) * g])] +=
        1.0 / static_cast<double>(k);
  return row;
}

OracleKmeans oracle_kmeans_1d(const std::vector<double>& values, int k, uint64_t seed) {
  const size_t n = values.size();
  Rng rng(derive_seed(seed, "kmeans-init"));
  std::vector<double> centers{values[rng.uniform_index(n)]};
  while (static_cast<int>(centers.size()) < k) {
    double far_d = -1.0;
    size_t far_i = 0;
    for (size_t i = 0; i < n; ++i) {
      double nearest = std::abs(values[i] - centers[0]);
      for (double c : centers) nearest = std::min(nearest, std::abs(values[i] - c));
      if (nearest > far_d) {
        far_d = nearest;
        far_i = i;
      }
    }
    centers.push_back(values[far_i]);
  }
  OracleKmeans out;
  out.assignment.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::abs(values[i] - centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(values[i] - centers[static_cast<size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      out.assignment[i] = best;
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      double sum = 0.0;
      size_t count = 0;
      for (size_t i = 0; i < n; ++i)
        if (out.assignment[i] == c) {
          sum += values[i];
          ++count;
        }
      if (count == 0) continue;
      const double updated = sum / static_cast<double>(count);
      shift = std::max(shift, std::abs(updated - centers[static_cast<size_t>(c)]));
      centers[static_cast<size_t>(c)] = updated;
    }
    if (shift < 1e-12) break;
  }
  out.centroids = centers;
  return out;
}

long double softmax_ce_highprec(const std::vector<double>& logits, size_t rows, size_t cols,
                                const std::vector<int>& labels) {
  long double total = 0.0L;
  for (size_t r = 0; r < rows; ++r) {
    long double sum = 0.0L;
    for (size_t j = 0; j < cols; ++j) sum += expl(static_cast<long double>(logits[r * cols + j]));
    total += logl(sum) - static_cast<long double>(logits[r * cols + static_cast<size_t>(labels[r])]);
  }
  return total / static_cast<long double>(rows);
}

std::string temp_dir(const std::string& tag) {
  const std::string dir = (std::filesystem::temp_directory_path() / ("ordlab_" + tag)).string();
  std::filesystem::create_directories(dir);
  return dir;
}

FileDataset make_cifar_fixture(const std::string& dir, int train_per_class, int test_per_class,
                               double noise, uint64_t seed, double amp_min, double amp_max) {
  std::filesystem::create_directories(dir);
  const uint64_t structure = derive_seed(seed, "structure");
  Dataset train_raw = synthetic_images(10, train_per_class, 3, 32, 32, noise, structure,
                                       derive_seed(seed, "train"), amp_min, amp_max);
  Dataset test_raw = synthetic_images(10, test_per_class, 3, 32, 32, noise, structure,
                                      derive_seed(seed, "test"), amp_min, amp_max);
  FileDataset out;
  const std::string train_path = dir + "/train.bin";
  const std::string test_path = dir + "/test.bin";
  write_cifar10(train_path, train_raw);
  write_cifar10(test_path, test_raw);
  out.train = load_cifar10({train_path});
  out.test = load_cifar10({test_path});
  out.files = {train_path, test_path};
  return out;
}

FileDataset make_mnist01_fixture(const std::string& dir, int train_per_class, int test_per_class,
                                 double noise, uint64_t seed) {
  std::filesystem::create_directories(dir);
  const uint64_t structure = derive_seed(seed, "structure");
  Dataset train_raw =
      synthetic_images(2, train_per_class, 1, 28, 28, noise, structure, derive_seed(seed, "train"));
  Dataset test_raw =
      synthetic_images(2, test_per_class, 1, 28, 28, noise, structure, derive_seed(seed, "test"));
  FileDataset out;
  const std::string ti = dir + "/train-images.idx";
  const std::string tl = dir + "/train-labels.idx";
  const std::string vi = dir + "/test-images.idx";
  const std::string vl = dir + "/test-labels.idx";
  write_mnist_idx(ti, tl, train_raw);
  write_mnist_idx(vi, vl, test_raw);
  out.train = load_mnist_idx(ti, tl);
  out.test = load_mnist_idx(vi, vl);
  out.files = {ti, tl, vi, vl};
  return out;
}

}  // namespace ordlab::testing
