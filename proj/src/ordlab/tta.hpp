#pragma once

#include "ordlab/data.hpp"
#include "ordlab/nn.hpp"

namespace ordlab {

struct TTAConfig {
  int c = 16;           // augmented copies per query
  double lambda = 1.0;  // weight of the query image
  int k = 4;            // mixing arity: query + (k-1) co-samples
  bool pool_train = false;
  bool normalize_coefficients = false;  // rescale coefficients to sum 1
  uint64_t seed = 1;
};

struct TTAPrediction {
  std::vector<double> probs;
  int predicted = 0;
};

// The C mixed images for one query, stacked as (C, ...). Query coefficient
// lambda/K, co-sample coefficient 1/(K*lambda); lambda = 1 averages the K
// inputs. Co-samples are drawn with replacement from the pool.
Tensor tta_mixtures(const Tensor& image, const Dataset& pool, const TTAConfig& cfg, uint64_t image_key);

// Steps: build C mixtures of the query with fresh random co-samples, forward
// each through the probability head, average the C prediction vectors, argmax.
TTAPrediction tta_predict(Model& model, const Tensor& image, const Dataset& pool, const TTAConfig& cfg,
                          const PreprocessConfig& pre, uint64_t image_key);

struct TTAEvaluation {
  double accuracy = 0.0;
  std::vector<double> per_class_acc;
  std::vector<int> per_class_count;
};

// Per-image streams are split by image index, so the result is independent of
// the worker count.
TTAEvaluation tta_evaluate(Model& model, const Dataset& eval_ds, const Dataset& pool,
                           const TTAConfig& cfg, const PreprocessConfig& pre, int workers = 1,
                           int limit = 0);

struct AttackConfig {
  enum class Kind { fgsm, pgd };
  Kind kind = Kind::fgsm;
  double epsilon = 8.0 / 255.0;  // pixel units
  double alpha = 2.0 / 255.0;    // PGD step size
  int steps = 10;                // PGD iterations
};

// image + eps * sign(grad_image loss), clipped to [0,1]
Tensor fgsm(Model& model, const Tensor& image, int label, double eps, const PreprocessConfig& pre);

// Iterated ascent, each step projected to the eps max-norm ball around the
// input and clipped to [0,1]. steps=1, alpha=eps is exactly fgsm.
Tensor pgd(Model& model, const Tensor& image, int label, double eps, double alpha, int steps,
           const PreprocessConfig& pre);

Dataset attack_dataset(Model& model, const Dataset& clean, const AttackConfig& cfg,
                       const PreprocessConfig& pre, int limit = 0);

struct RobustnessCell {
  std::string attack;  // "clean" or the attack name
  double plain_acc = 0.0;
  double tta_acc = 0.0;
  bool has_tta = false;
};

struct RobustnessReport {
  std::vector<RobustnessCell> cells;
};

// One evaluation pass per cell; adversarial images are fixed once per run so
// the with/without-TTA comparison is paired.
RobustnessReport robustness_eval(Model& model, const Dataset& eval_ds, const Dataset& pool,
                                 const std::vector<AttackConfig>& attacks, const TTAConfig* tta,
                                 const PreprocessConfig& pre, int workers = 1, int limit = 0);

std::string robustness_csv(const RobustnessReport& report);

double plain_accuracy(Model& model, const Dataset& ds, const PreprocessConfig& pre, int eval_batch = 256);

}  // namespace ordlab
