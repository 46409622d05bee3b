#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ordlab/rng.hpp"
#include "ordlab/tensor.hpp"

namespace ordlab {

struct Sample {
  Tensor image;  // (c,h,w) or (dims), values in [0,1] before normalization
  int label = 0;
};

// Immutable after construction; safely shareable across threads.
struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  std::string provenance;

  size_t size() const { return samples.size(); }
  const std::vector<size_t>& image_shape() const { return samples.front().image.shape(); }
};

struct PreprocessConfig {
  std::vector<float> mean{0.0f};  // per channel, broadcast when a single entry
  std::vector<float> stdev{1.0f};
  float flip_prob = 0.0f;
  int crop_pad = 0;
};

// CIFAR-10 binary: 3073-byte records, 1 label byte then 3x32x32 planes.
Dataset load_cifar10(const std::vector<std::string>& paths);
void write_cifar10(const std::string& path, const Dataset& ds);

// MNIST IDX pair: image magic 2051, label magic 2049, big-endian dims.
Dataset load_mnist_idx(const std::string& image_path, const std::string& label_path);
void write_mnist_idx(const std::string& image_path, const std::string& label_path, const Dataset& ds);

Dataset subset_per_class(const Dataset& ds, int per_class, const std::optional<std::set<int>>& classes,
                         uint64_t seed);

// Seeded Gaussian clusters; linearly separable for large separation.
// structure_seed fixes the class centers (share it between train and test
// splits of one task), sample_seed drives the per-sample noise.
Dataset synthetic_blobs(int num_classes, int per_class, int dims, double separation,
                        uint64_t structure_seed, uint64_t sample_seed);

// Class-patterned random images in CIFAR/MNIST-like layouts. Pixels are
// byte-quantized so file round-trips stay exact. Seeds split as for blobs.
// The pattern amplitude range controls how far apart classes sit in pixel
// space, hence how fragile the task is to pixel-budget attacks.
Dataset synthetic_images(int num_classes, int per_class, int channels, int height, int width,
                         double noise_sd, uint64_t structure_seed, uint64_t sample_seed,
                         double amp_min = 0.25, double amp_max = 0.4);

// Each sample exactly once; reproducible from seed. strict requires b | n.
std::vector<std::vector<int>> batch_split(size_t n, int batch_size, uint64_t seed, bool strict);

Tensor gather_images(const Dataset& ds, std::span<const int> indices);
std::vector<int> gather_labels(const Dataset& ds, std::span<const int> indices);

void flip_horizontal(Tensor& batch);  // in place, all samples

// Normalization always; flip/crop only in train mode (drawing from rng).
Tensor preprocess(const Tensor& batch, const PreprocessConfig& cfg, Rng* rng, bool train_mode);

}  // namespace ordlab
