#include "ordlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace ordlab {

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::format, "cannot open file: " + path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::runtime, "cannot open file for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorKind::runtime, "short write: " + path);
}

uint32_t read_be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint8_t quantize_pixel(float v) {
  float scaled = std::clamp(v, 0.0f, 1.0f) * 255.0f;
  return static_cast<uint8_t>(std::lround(scaled));
}

}  // namespace

Dataset load_cifar10(const std::vector<std::string>& paths) {
  constexpr size_t kRecord = 3073;
  Dataset ds;
  ds.num_classes = 10;
  for (const auto& path : paths) {
    auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kRecord != 0)
      fail(ErrorKind::format, "cifar10: file length " + std::to_string(bytes.size()) +
                                  " is not a multiple of 3073: " + path);
    const size_t count = bytes.size() / kRecord;
    for (size_t r = 0; r < count; ++r) {
      const uint8_t* rec = bytes.data() + r * kRecord;
      if (rec[0] >= 10)
        fail(ErrorKind::format, "cifar10: label byte " + std::to_string(int(rec[0])) + " out of range in " +
                                    path + " record " + std::to_string(r));
      Sample s;
      s.label = rec[0];
      s.image = Tensor({3, 32, 32});
      for (size_t i = 0; i < 3072; ++i) s.image[i] = static_cast<float>(rec[1 + i]) / 255.0f;
      ds.samples.push_back(std::move(s));
    }
    ds.provenance += (ds.provenance.empty() ? "" : ",") + path;
  }
  if (ds.samples.empty()) fail(ErrorKind::format, "cifar10: no records loaded");
  return ds;
}

void write_cifar10(const std::string& path, const Dataset& ds) {
  std::vector<uint8_t> bytes;
  bytes.reserve(ds.size() * 3073);
  for (const auto& s : ds.samples) {
    if (s.image.size() != 3072) fail(ErrorKind::invalid_argument, "write_cifar10: image is not 3x32x32");
    bytes.push_back(static_cast<uint8_t>(s.label));
    for (size_t i = 0; i < 3072; ++i) bytes.push_back(quantize_pixel(s.image[i]));
  }
  write_file(path, bytes);
}

Dataset load_mnist_idx(const std::string& image_path, const std::string& label_path) {
  auto img = read_file(image_path);
  auto lbl = read_file(label_path);
  if (img.size() < 16) fail(ErrorKind::format, "mnist: image file truncated: " + image_path);
  if (lbl.size() < 8) fail(ErrorKind::format, "mnist: label file truncated: " + label_path);
  if (read_be32(img.data()) != 0x00000803)
    fail(ErrorKind::format, "mnist: bad image magic in " + image_path + " (want 0x00000803)");
  if (read_be32(lbl.data()) != 0x00000801)
    fail(ErrorKind::format, "mnist: bad label magic in " + label_path + " (want 0x00000801)");
  const uint32_t n_img = read_be32(img.data() + 4);
  const uint32_t rows = read_be32(img.data() + 8);
  const uint32_t cols = read_be32(img.data() + 12);
  const uint32_t n_lbl = read_be32(lbl.data() + 4);
  if (n_img != n_lbl)
    fail(ErrorKind::format, "mnist: image count " + std::to_string(n_img) + " != label count " +
                                std::to_string(n_lbl));
  if (img.size() != 16 + size_t(n_img) * rows * cols)
    fail(ErrorKind::format, "mnist: image file length mismatch: " + image_path);
  if (lbl.size() != 8 + size_t(n_lbl)) fail(ErrorKind::format, "mnist: label file length mismatch: " + label_path);
  Dataset ds;
  ds.num_classes = 10;
  ds.provenance = image_path;
  for (uint32_t i = 0; i < n_img; ++i) {
    Sample s;
    s.label = lbl[8 + i];
    s.image = Tensor({1, rows, cols});
    const uint8_t* px = img.data() + 16 + size_t(i) * rows * cols;
    for (size_t j = 0; j < size_t(rows) * cols; ++j) s.image[j] = static_cast<float>(px[j]) / 255.0f;
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) fail(ErrorKind::format, "mnist: no samples in " + image_path);
  return ds;
}

void write_mnist_idx(const std::string& image_path, const std::string& label_path, const Dataset& ds) {
  const auto& shape = ds.image_shape();
  if (shape.size() != 3 || shape[0] != 1)
    fail(ErrorKind::invalid_argument, "write_mnist_idx: images must be single channel (1,h,w)");
  std::vector<uint8_t> img, lbl;
  put_be32(img, 0x00000803);
  put_be32(img, static_cast<uint32_t>(ds.size()));
  put_be32(img, static_cast<uint32_t>(shape[1]));
  put_be32(img, static_cast<uint32_t>(shape[2]));
  put_be32(lbl, 0x00000801);
  put_be32(lbl, static_cast<uint32_t>(ds.size()));
  for (const auto& s : ds.samples) {
    for (size_t i = 0; i < s.image.size(); ++i) img.push_back(quantize_pixel(s.image[i]));
    lbl.push_back(static_cast<uint8_t>(s.label));
  }
  write_file(image_path, img);
  write_file(label_path, lbl);
}

Dataset subset_per_class(const Dataset& ds, int per_class, const std::optional<std::set<int>>& classes,
                         uint64_t seed) {
  if (per_class <= 0) fail(ErrorKind::invalid_argument, "subset_per_class: per_class must be >= 1");
  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < ds.size(); ++i) by_class[ds.samples[i].label].push_back(static_cast<int>(i));
  std::vector<int> wanted;
  if (classes) {
    wanted.assign(classes->begin(), classes->end());
  } else {
    for (const auto& [label, _] : by_class) wanted.push_back(label);
  }
  Rng rng(derive_seed(seed, "subset"));
  Dataset out;
  out.num_classes = ds.num_classes;
  out.provenance = ds.provenance + "|subset" + std::to_string(per_class) + "@" + std::to_string(seed);
  for (int label : wanted) {
    auto it = by_class.find(label);
    if (it == by_class.end() || static_cast<int>(it->second.size()) < per_class)
      fail(ErrorKind::invalid_argument,
           "subset_per_class: class " + std::to_string(label) + " has fewer than " +
               std::to_string(per_class) + " samples");
    std::vector<int> idx = it->second;
    rng.shuffle(idx);
    for (int i = 0; i < per_class; ++i) out.samples.push_back(ds.samples[idx[i]]);
  }
  return out;
}

Dataset synthetic_blobs(int num_classes, int per_class, int dims, double separation,
                        uint64_t structure_seed, uint64_t sample_seed) {
  if (separation <= 0) fail(ErrorKind::invalid_argument, "synthetic_blobs: separation must be > 0");
  Rng center_rng(derive_seed(structure_seed, "blob-centers"));
  std::vector<std::vector<double>> centers;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<double> dir(dims);
    double norm = 0.0;
    for (auto& v : dir) {
      v = center_rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (auto& v : dir) v = v / norm * separation;
    centers.push_back(std::move(dir));
  }
  Dataset ds;
  ds.num_classes = num_classes;
  ds.provenance = "blobs@" + std::to_string(structure_seed) + "/" + std::to_string(sample_seed);
  Rng rng(derive_seed(sample_seed, "blob-samples"));
  for (int c = 0; c < num_classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = c;
      s.image = Tensor({static_cast<size_t>(dims)});
      for (int d = 0; d < dims; ++d) s.image[d] = static_cast<float>(centers[c][d] + rng.normal());
      ds.samples.push_back(std::move(s));
    }
  return ds;
}

Dataset synthetic_images(int num_classes, int per_class, int channels, int height, int width,
                         double noise_sd, uint64_t structure_seed, uint64_t sample_seed,
                         double amp_min, double amp_max) {
  Rng pattern_rng(derive_seed(structure_seed, "img-patterns"));
  struct Wave {
    double fx, fy, px, py, amp;
  };
  std::vector<std::vector<Wave>> patterns(num_classes);
  for (int c = 0; c < num_classes; ++c)
    for (int ch = 0; ch < channels; ++ch)
      patterns[c].push_back(Wave{1.0 + pattern_rng.uniform_index(3), 1.0 + pattern_rng.uniform_index(3),
                                 pattern_rng.uniform(), pattern_rng.uniform(),
                                 amp_min + (amp_max - amp_min) * pattern_rng.uniform()});
  Dataset ds;
  ds.num_classes = num_classes;
  ds.provenance =
      "synthetic-images@" + std::to_string(structure_seed) + "/" + std::to_string(sample_seed);
  Rng rng(derive_seed(sample_seed, "img-samples"));
  constexpr double kTau = 6.283185307179586;
  for (int c = 0; c < num_classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = c;
      s.image = Tensor({static_cast<size_t>(channels), static_cast<size_t>(height), static_cast<size_t>(width)});
      const double jitter = 0.08 * rng.normal();
      for (int ch = 0; ch < channels; ++ch) {
        const Wave& wv = patterns[c][ch];
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) {
            double base = 0.5 + wv.amp * std::sin(kTau * wv.fx * (x / double(width) + wv.px)) *
                                    std::cos(kTau * wv.fy * (y / double(height) + wv.py));
            double v = base + jitter + noise_sd * rng.normal();
            const uint8_t q = quantize_pixel(static_cast<float>(v));
            s.image[(size_t(ch) * height + y) * width + x] = static_cast<float>(q) / 255.0f;
          }
      }
      ds.samples.push_back(std::move(s));
    }
  return ds;
}

std::vector<std::vector<int>> batch_split(size_t n, int batch_size, uint64_t seed, bool strict) {
  if (batch_size < 1) fail(ErrorKind::invalid_argument, "batch_split: batch size must be >= 1");
  const size_t b = static_cast<size_t>(batch_size);
  if (strict && n % b != 0)
    fail(ErrorKind::invalid_argument, "batch_split: strict mode requires batch size to divide " +
                                          std::to_string(n));
  std::vector<int> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  Rng rng(derive_seed(seed, "batch-split"));
  rng.shuffle(perm);
  std::vector<std::vector<int>> batches;
  for (size_t start = 0; start < n; start += b) {
    const size_t end = std::min(n, start + b);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

Tensor gather_images(const Dataset& ds, std::span<const int> indices) {
  if (indices.empty()) fail(ErrorKind::invalid_argument, "gather_images: empty index list");
  const auto& shape = ds.image_shape();
  std::vector<size_t> out_shape{indices.size()};
  out_shape.insert(out_shape.end(), shape.begin(), shape.end());
  Tensor out(out_shape);
  const size_t stride = ds.samples.front().image.size();
  for (size_t r = 0; r < indices.size(); ++r) {
    const int idx = indices[r];
    if (idx < 0 || static_cast<size_t>(idx) >= ds.size())
      fail(ErrorKind::invalid_argument, "gather_images: index out of range");
    std::copy_n(ds.samples[idx].image.data(), stride, out.data() + r * stride);
  }
  return out;
}

std::vector<int> gather_labels(const Dataset& ds, std::span<const int> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int idx : indices) out.push_back(ds.samples[idx].label);
  return out;
}

void flip_horizontal(Tensor& batch) {
  const size_t w = batch.extent(batch.rank() - 1);
  const size_t rows = batch.size() / w;
  for (size_t r = 0; r < rows; ++r) {
    float* p = batch.data() + r * w;
    std::reverse(p, p + w);
  }
}

namespace {

void flip_sample(float* img, size_t h, size_t w, size_t channels) {
  for (size_t c = 0; c < channels; ++c)
    for (size_t y = 0; y < h; ++y) {
      float* row = img + (c * h + y) * w;
      std::reverse(row, row + w);
    }
}

void crop_sample(const float* src, float* dst, size_t channels, size_t h, size_t w, int pad, int dy, int dx) {
  // pad with zeros, then take a window of the original size at (dy, dx)
  for (size_t c = 0; c < channels; ++c)
    for (size_t y = 0; y < h; ++y)
      for (size_t x = 0; x < w; ++x) {
        const long sy = static_cast<long>(y) + dy - pad;
        const long sx = static_cast<long>(x) + dx - pad;
        float v = 0.0f;
        if (sy >= 0 && sy < static_cast<long>(h) && sx >= 0 && sx < static_cast<long>(w))
          v = src[(c * h + sy) * w + sx];
        dst[(c * h + y) * w + x] = v;
      }
}

}  // namespace

Tensor preprocess(const Tensor& batch, const PreprocessConfig& cfg, Rng* rng, bool train_mode) {
  for (float s : cfg.stdev)
    if (s <= 0.0f) fail(ErrorKind::invalid_argument, "preprocess: std entries must be > 0");
  if (cfg.crop_pad < 0) fail(ErrorKind::invalid_argument, "preprocess: padding must be >= 0");
  Tensor out = batch;
  const bool image_like = batch.rank() == 4;
  const size_t m = batch.extent(0);
  const size_t channels = image_like ? batch.extent(1) : 1;
  const size_t h = image_like ? batch.extent(2) : 1;
  const size_t w = image_like ? batch.extent(3) : batch.size() / m;
  const size_t sample_len = batch.size() / m;

  if (train_mode && image_like && (cfg.flip_prob > 0.0f || cfg.crop_pad > 0)) {
    if (!rng) fail(ErrorKind::invalid_argument, "preprocess: train-mode augmentation needs an rng");
    std::vector<float> tmp(sample_len);
    for (size_t s = 0; s < m; ++s) {
      float* img = out.data() + s * sample_len;
      if (cfg.flip_prob > 0.0f && rng->uniform() < cfg.flip_prob) flip_sample(img, h, w, channels);
      if (cfg.crop_pad > 0) {
        const int dy = static_cast<int>(rng->uniform_index(2 * cfg.crop_pad + 1));
        const int dx = static_cast<int>(rng->uniform_index(2 * cfg.crop_pad + 1));
        crop_sample(img, tmp.data(), channels, h, w, cfg.crop_pad, dy, dx);
        std::copy(tmp.begin(), tmp.end(), img);
      }
    }
  }

  auto channel_value = [&](const std::vector<float>& v, size_t c) {
    return v.size() == 1 ? v[0] : v.at(c);
  };
  for (size_t s = 0; s < m; ++s)
    for (size_t c = 0; c < channels; ++c) {
      const float mean = channel_value(cfg.mean, c);
      const float stdev = channel_value(cfg.stdev, c);
      float* p = out.data() + s * sample_len + c * (sample_len / channels);
      for (size_t i = 0; i < sample_len / channels; ++i) p[i] = (p[i] - mean) / stdev;
    }
  return out;
}

}  // namespace ordlab
