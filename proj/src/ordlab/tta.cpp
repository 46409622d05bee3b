#include "ordlab/tta.hpp"

#include <algorithm>
#include <thread>

#include "ordlab/losses.hpp"
#include "ordlab/metrics.hpp"

namespace ordlab {

Tensor tta_mixtures(const Tensor& image, const Dataset& pool, const TTAConfig& cfg, uint64_t image_key) {
  if (cfg.c < 1) fail(ErrorKind::invalid_argument, "tta: C must be >= 1");
  if (cfg.k < 1) fail(ErrorKind::invalid_argument, "tta: K must be >= 1");
  if (cfg.lambda <= 0.0) fail(ErrorKind::invalid_argument, "tta: lambda must be > 0");
  if (pool.size() == 0) fail(ErrorKind::invalid_argument, "tta: empty co-sample pool");

  const size_t sample_len = image.size();
  const double query_coeff = cfg.lambda / static_cast<double>(cfg.k);
  const double co_coeff = 1.0 / (static_cast<double>(cfg.k) * cfg.lambda);
  const double coeff_sum = query_coeff + co_coeff * static_cast<double>(cfg.k - 1);

  Rng rng(derive_seed(cfg.seed, "tta-image", image_key));
  std::vector<size_t> mixed_shape{static_cast<size_t>(cfg.c)};
  for (size_t e : image.shape()) mixed_shape.push_back(e);
  Tensor mixed(mixed_shape);
  const float qc = static_cast<float>(query_coeff);
  const float cc = static_cast<float>(co_coeff);
  for (int a = 0; a < cfg.c; ++a) {
    float* dst = mixed.data() + static_cast<size_t>(a) * sample_len;
    for (size_t i = 0; i < sample_len; ++i) dst[i] = qc * image[i];
    for (int j = 0; j < cfg.k - 1; ++j) {
      const size_t pick = rng.uniform_index(pool.size());
      const Tensor& co = pool.samples[pick].image;
      for (size_t i = 0; i < sample_len; ++i) dst[i] += cc * co[i];
    }
    if (cfg.normalize_coefficients && coeff_sum != 1.0) {
      const float inv = static_cast<float>(1.0 / coeff_sum);
      for (size_t i = 0; i < sample_len; ++i) dst[i] *= inv;
    }
  }
  return mixed;
}

TTAPrediction tta_predict(Model& model, const Tensor& image, const Dataset& pool, const TTAConfig& cfg,
                          const PreprocessConfig& pre, uint64_t image_key) {
  Tensor mixed = tta_mixtures(image, pool, cfg, image_key);
  Tensor inputs = preprocess(mixed, pre, nullptr, /*train_mode=*/false);
  Tensor logits = model.forward(inputs);
  Tensor probs = softmax_probs(logits);
  const size_t classes = probs.extent(1);
  TTAPrediction out;
  out.probs.assign(classes, 0.0);
  for (int a = 0; a < cfg.c; ++a)
    for (size_t cl = 0; cl < classes; ++cl)
      out.probs[cl] += static_cast<double>(probs[static_cast<size_t>(a) * classes + cl]);
  for (auto& p : out.probs) p /= static_cast<double>(cfg.c);
  out.predicted = 0;
  for (size_t cl = 1; cl < classes; ++cl)
    if (out.probs[cl] > out.probs[static_cast<size_t>(out.predicted)]) out.predicted = static_cast<int>(cl);
  return out;
}

TTAEvaluation tta_evaluate(Model& model, const Dataset& eval_ds, const Dataset& pool,
                           const TTAConfig& cfg, const PreprocessConfig& pre, int workers, int limit) {
  const size_t n = limit > 0 ? std::min<size_t>(eval_ds.size(), static_cast<size_t>(limit)) : eval_ds.size();
  std::vector<int> predictions(n, 0);
  const int w = std::max(1, workers);
  auto work = [&](int worker_id) {
    Model local = model;  // independent clone per worker
    for (size_t i = static_cast<size_t>(worker_id); i < n; i += static_cast<size_t>(w))
      predictions[i] = tta_predict(local, eval_ds.samples[i].image, pool, cfg, pre, i).predicted;
  };
  if (w == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < w; ++t) threads.emplace_back(work, t);
    for (auto& t : threads) t.join();
  }
  TTAEvaluation out;
  out.per_class_acc.assign(static_cast<size_t>(eval_ds.num_classes), 0.0);
  out.per_class_count.assign(static_cast<size_t>(eval_ds.num_classes), 0);
  size_t hits = 0;
  std::vector<size_t> class_hits(static_cast<size_t>(eval_ds.num_classes), 0);
  for (size_t i = 0; i < n; ++i) {
    const int label = eval_ds.samples[i].label;
    ++out.per_class_count[static_cast<size_t>(label)];
    if (predictions[i] == label) {
      ++hits;
      ++class_hits[static_cast<size_t>(label)];
    }
  }
  for (size_t c = 0; c < class_hits.size(); ++c)
    out.per_class_acc[c] = out.per_class_count[c] > 0
                               ? static_cast<double>(class_hits[c]) / out.per_class_count[c]
                               : 0.0;
  out.accuracy = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  return out;
}

namespace {

// Gradient of the cross-entropy loss with respect to the pixel-space image;
// chains through the eval-mode normalization.
Tensor pixel_gradient(Model& model, const Tensor& image, int label, const PreprocessConfig& pre) {
  std::vector<size_t> shape{1};
  for (size_t e : image.shape()) shape.push_back(e);
  Tensor batch = Tensor::from(shape, image.values());
  Tensor inputs = preprocess(batch, pre, nullptr, /*train_mode=*/false);
  Tensor logits = model.forward(inputs);
  const int labels[1] = {label};
  auto lg = softmax_cross_entropy(logits, std::span<const int>(labels, 1));
  Tensor grad_norm = model.backward(lg.grad);
  // d(normalized)/d(pixel) = 1/std per channel
  Tensor grad = Tensor::from(image.shape(), grad_norm.values());
  const size_t channels = image.rank() == 3 ? image.extent(0) : 1;
  const size_t per_channel = image.size() / channels;
  for (size_t c = 0; c < channels; ++c) {
    const float stdev = pre.stdev.size() == 1 ? pre.stdev[0] : pre.stdev.at(c);
    float* g = grad.data() + c * per_channel;
    for (size_t i = 0; i < per_channel; ++i) g[i] /= stdev;
  }
  return grad;
}

}  // namespace

Tensor pgd(Model& model, const Tensor& image, int label, double eps, double alpha, int steps,
           const PreprocessConfig& pre) {
  if (eps < 0.0) fail(ErrorKind::invalid_argument, "pgd: epsilon must be >= 0");
  if (steps < 1) fail(ErrorKind::invalid_argument, "pgd: steps must be >= 1");
  const float e = static_cast<float>(eps);
  const float a = static_cast<float>(alpha);
  Tensor adv = image;
  for (int s = 0; s < steps; ++s) {
    Tensor grad = pixel_gradient(model, adv, label, pre);
    for (size_t i = 0; i < adv.size(); ++i) {
      const float g = grad[i];
      const float sign = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
      float v = adv[i] + a * sign;
      v = std::min(v, image[i] + e);  // project to the eps ball
      v = std::max(v, image[i] - e);
      v = std::min(std::max(v, 0.0f), 1.0f);
      adv[i] = v;
    }
  }
  return adv;
}

Tensor fgsm(Model& model, const Tensor& image, int label, double eps, const PreprocessConfig& pre) {
  return pgd(model, image, label, eps, eps, 1, pre);
}

Dataset attack_dataset(Model& model, const Dataset& clean, const AttackConfig& cfg,
                       const PreprocessConfig& pre, int limit) {
  const size_t n = limit > 0 ? std::min<size_t>(clean.size(), static_cast<size_t>(limit)) : clean.size();
  Dataset out;
  out.num_classes = clean.num_classes;
  out.provenance = clean.provenance + "|attacked";
  for (size_t i = 0; i < n; ++i) {
    Sample s;
    s.label = clean.samples[i].label;
    s.image = cfg.kind == AttackConfig::Kind::fgsm
                  ? fgsm(model, clean.samples[i].image, s.label, cfg.epsilon, pre)
                  : pgd(model, clean.samples[i].image, s.label, cfg.epsilon, cfg.alpha, cfg.steps, pre);
    out.samples.push_back(std::move(s));
  }
  return out;
}

double plain_accuracy(Model& model, const Dataset& ds, const PreprocessConfig& pre, int eval_batch) {
  const size_t n = ds.size();
  const size_t chunk = static_cast<size_t>(std::max(1, eval_batch));
  size_t hits = 0;
  for (size_t start = 0; start < n; start += chunk) {
    const size_t end = std::min(n, start + chunk);
    std::vector<int> idx(end - start);
    for (size_t i = start; i < end; ++i) idx[i - start] = static_cast<int>(i);
    Tensor inputs = preprocess(gather_images(ds, idx), pre, nullptr, false);
    Tensor logits = model.forward(inputs);
    for (size_t r = 0; r < idx.size(); ++r)
      if (argmax_row(logits, r) == ds.samples[start + r].label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

RobustnessReport robustness_eval(Model& model, const Dataset& eval_ds, const Dataset& pool,
                                 const std::vector<AttackConfig>& attacks, const TTAConfig* tta,
                                 const PreprocessConfig& pre, int workers, int limit) {
  RobustnessReport report;
  const size_t n = limit > 0 ? std::min<size_t>(eval_ds.size(), static_cast<size_t>(limit)) : eval_ds.size();
  Dataset subset;
  subset.num_classes = eval_ds.num_classes;
  subset.provenance = eval_ds.provenance;
  subset.samples.assign(eval_ds.samples.begin(), eval_ds.samples.begin() + static_cast<long>(n));

  auto eval_cell = [&](const std::string& name, const Dataset& ds) {
    RobustnessCell cell;
    cell.attack = name;
    cell.plain_acc = plain_accuracy(model, ds, pre);
    if (tta) {
      cell.has_tta = true;
      cell.tta_acc = tta_evaluate(model, ds, pool, *tta, pre, workers).accuracy;
    }
    report.cells.push_back(cell);
  };

  eval_cell("clean", subset);
  for (const auto& atk : attacks) {
    const std::string name = atk.kind == AttackConfig::Kind::fgsm ? "fgsm" : "pgd";
    Dataset attacked = attack_dataset(model, subset, atk, pre);
    eval_cell(name, attacked);
  }
  return report;
}

std::string robustness_csv(const RobustnessReport& report) {
  std::string header = "model_tag";
  for (const auto& c : report.cells) header += ',' + c.attack;
  std::string plain = "plain";
  std::string tta_row = "tta";
  bool has_tta = false;
  for (const auto& c : report.cells) {
    plain += ',' + format_double(c.plain_acc);
    if (c.has_tta) has_tta = true;
    tta_row += ',' + format_double(c.tta_acc);
  }
  std::string out = header + '\n' + plain + '\n';
  if (has_tta) out += tta_row + '\n';
  return out;
}

}  // namespace ordlab
