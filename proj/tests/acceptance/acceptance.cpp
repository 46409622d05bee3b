// Acceptance suite: twelve end-to-end criteria, one pass/fail line each.
// Run all: `acceptance`; run one: `acceptance <n>`.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "ordlab/config.hpp"
#include "ordlab/explorer.hpp"
#include "ordlab/kmeans.hpp"
#include "ordlab/metrics.hpp"
#include "ordlab/plot.hpp"
#include "ordlab/poa.hpp"
#include "ordlab/runner.hpp"
#include "ordlab/sumaug.hpp"
#include "ordlab/tta.hpp"
#include "support/oracles.hpp"

using namespace ordlab;
namespace fs = std::filesystem;

namespace {

struct CriterionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw CriterionFailure(msg);
}

std::string work_dir() {
  static std::string dir = [] {
    std::string d = (fs::temp_directory_path() / "ordlab_acceptance").string();
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---- shared fixtures ------------------------------------------------------

// 1000-sample 10-class train subset (100 per class) + 200-sample test set in
// real CIFAR-10 binary files, loaded through the production loader.
const testing::FileDataset& cifar_fixture() {
  static testing::FileDataset fx = [] {
    testing::FileDataset raw = testing::make_cifar_fixture(work_dir() + "/cifar", 120, 20, 0.25, 1001);
    raw.train = subset_per_class(raw.train, 100, std::nullopt, 77);
    return raw;
  }();
  return fx;
}

ModelSpec cifar_conv_spec() {
  ModelSpec spec;
  SmallConvSpec conv;
  conv.blocks = {{8, 3, 1}, {16, 3, 1}};
  conv.pooling = Pooling::max;
  spec.arch = conv;
  spec.input_shape = {3, 32, 32};
  spec.num_classes = 10;
  return spec;
}

TrainSettings cifar_settings() {
  TrainSettings s;
  s.batch_size = 40;
  s.epochs = 3;
  s.seed = 12;
  s.lr = 0.05;
  s.momentum = 0.9;
  s.weight_decay = 0.0001;
  return s;
}

// ---- criteria -------------------------------------------------------------

void criterion_1_gcc_suite() {
  for (int n : {2, 3, 4, 8}) {
    double prev_decay = -1.0, prev_raised = -1.0;
    int prev_k = -1;
    for (int i = 0; i <= 1000; ++i) {
      const double t = static_cast<double>(i) / 1000.0;
      CoefficientVector cv = gcc(n, t);
      double sum = 0.0;
      for (double w : cv.weights) {
        require(w >= 0.0, "gcc coefficient negative");
        sum += w;
      }
      require(std::fabs(sum - 1.0) <= 1e-9, "gcc sum deviates from 1 by more than 1e-9");
      const int k = static_cast<int>(std::floor(t * (n - 1)));
      int trailing = 0;
      for (int j = n - 1; j >= 0 && cv.weights[static_cast<size_t>(j)] == 0.0; --j) ++trailing;
      require(trailing == k, "gcc trailing-zero count != floor(t*(n-1))");
      if (k == prev_k && k < n - 1) {
        const double decay = cv.weights[static_cast<size_t>(n - k - 1)];
        const double raised = cv.weights[0];
        require(decay <= prev_decay + 1e-15, "decaying coefficient increased within a segment");
        require(raised >= prev_raised - 1e-15, "raised coefficient decreased within a segment");
        prev_decay = decay;
        prev_raised = raised;
      } else if (k < n - 1) {
        prev_decay = cv.weights[static_cast<size_t>(n - k - 1)];
        prev_raised = cv.weights[0];
      }
      prev_k = k;
    }
    for (int k = 0; k < n - 1; ++k) {
      const double edge = static_cast<double>(k + 1) / static_cast<double>(n - 1);
      const double t = edge - 1e-7;
      if (t < 0.0) continue;
      CoefficientVector cv = gcc(n, t);
      if (cv.eliminated != k) continue;
      require(cv.weights[static_cast<size_t>(n - k - 1)] < 1e-6,
              "decaying coefficient does not vanish at the segment edge");
    }
  }
  CoefficientVector mid = gcc(2, 0.5);
  require(mid.weights[0] == 0.875 && mid.weights[1] == 0.125, "gcc(2,0.5) != (0.875, 0.125) exactly");
}

void criterion_2_mixing_oracle() {
  Rng rng(2024);
  const int m_options[4] = {4, 8, 16, 128};
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = m_options[rng.uniform_index(4)];
    std::vector<int> divisors;
    for (int k = 1; k <= m; ++k)
      if (m % k == 0) divisors.push_back(k);
    const int k = divisors[rng.uniform_index(divisors.size())];
    TensorD batch({static_cast<size_t>(m), 3});
    for (auto& v : batch.values()) v = 2.0 * rng.uniform() - 1.0;
    std::vector<int> labels(static_cast<size_t>(m));
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(10));

    auto mixed = mix_batch_average(batch, labels, k, 10);
    TensorD oracle = testing::naive_group_mean(batch, k);
    for (size_t i = 0; i < oracle.size(); ++i)
      require(std::fabs(mixed.inputs[i] - oracle[i]) <= 1e-12, "mix_batch_average deviates from oracle");
    const size_t g = static_cast<size_t>(m) / static_cast<size_t>(k);
    for (size_t i = 0; i < g; ++i) {
      double sum = 0.0;
      for (int c = 0; c < 10; ++c) sum += mixed.soft_targets[i * 10 + static_cast<size_t>(c)];
      require(std::fabs(sum - 1.0) <= 1e-9, "soft-target row does not sum to 1");
    }
    CoefficientVector cv = gcc(k, 0.0);
    auto weighted = mix_batch_weighted(batch, labels, cv.weights, 10);
    require(weighted.inputs.values() == mixed.inputs.values(),
            "mix_batch_weighted(gcc(n,0)) != mix_batch_average inputs");
    require(weighted.soft_targets.values() == mixed.soft_targets.values(),
            "mix_batch_weighted(gcc(n,0)) != mix_batch_average targets");
  }
}

void criterion_3_gradient_check() {
  ModelSpec mlp;
  mlp.arch = MlpSpec{{8}, Activation::relu};
  mlp.input_shape = {2};
  mlp.num_classes = 3;

  ModelSpec conv;
  SmallConvSpec block;
  block.blocks = {{2, 3, 1}};
  conv.arch = block;
  conv.input_shape = {1, 6, 6};
  conv.num_classes = 3;

  Rng rng(303);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    for (const ModelSpec* spec : {&mlp, &conv}) {
      ModelD model = build_model<double>(*spec, seed);
      std::vector<size_t> shape{3};
      for (size_t e : spec->input_shape) shape.push_back(e);
      TensorD x(shape);
      for (auto& v : x.values()) v = 2.0 * rng.uniform() - 1.0;
      std::vector<int> labels{0, 1, 2};
      double err = testing::fd_max_rel_error(
          model, x, [&](const TensorD& logits) { return softmax_cross_entropy(logits, labels); });
      require(err < 1e-5, "softmax CE gradient error " + format_double(err) + " at seed " +
                              std::to_string(seed));

      ModelD model2 = build_model<double>(*spec, seed);
      TensorD targets({3, 3});
      for (auto& v : targets.values()) v = rng.uniform();
      double err2 = testing::fd_max_rel_error(
          model2, x, [&](const TensorD& logits) { return mixed_bce_loss(logits, targets, 2); });
      require(err2 < 1e-5, "BCE gradient error " + format_double(err2) + " at seed " +
                               std::to_string(seed));
    }
  }
}

void criterion_4_rollback() {
  Dataset train = synthetic_blobs(4, 16, 6, 4.0, 40, 41);
  Dataset test = synthetic_blobs(4, 16, 6, 4.0, 40, 42);
  ModelSpec spec;
  spec.arch = MlpSpec{{10}, Activation::relu};
  spec.input_shape = {6};
  spec.num_classes = 4;
  TrainSettings settings;
  settings.batch_size = 8;
  settings.seed = 5;
  PreprocessConfig pre;
  Trainer tr(spec, settings, pre, &train, &test);
  Rng pick(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> indices;
    for (int j = 0; j < 8; ++j) indices.push_back(static_cast<int>(pick.uniform_index(train.size())));
    LearningItem item{ItemKind::batch, trial, indices};
    const DeltaMode mode = (trial & 1) ? DeltaMode::relative : DeltaMode::absolute;
    const std::string before = state_hash(tr.model(), tr.optimizer());
    if (trial & 2) {
      auto ref = make_external_reference(test, 16, static_cast<uint64_t>(trial));
      (void)score_max_loss_delta(tr, item, &ref, mode);
    } else {
      (void)score_max_loss_delta(tr, item, nullptr, mode);
    }
    require(state_hash(tr.model(), tr.optimizer()) == before,
            "state hash changed by scorer at trial " + std::to_string(trial));
    tr.step_ce(indices);
  }
}

void criterion_5_explorer_micro() {
  Dataset train = synthetic_blobs(2, 8, 4, 4.0, 50, 51);  // 16 samples
  Dataset test = synthetic_blobs(2, 8, 4, 4.0, 50, 52);
  ModelSpec spec;
  spec.arch = MlpSpec{{6}, Activation::relu};
  spec.input_shape = {4};
  spec.num_classes = 2;
  ExplorerConfig cfg;
  cfg.epochs = 2;
  cfg.clusters = 12;
  cfg.workers = 1;
  cfg.train.batch_size = 4;
  cfg.train.seed = 5;
  ExplorerResult serial = explore(spec, train, test, cfg);
  cfg.workers = 4;
  ExplorerResult parallel = explore(spec, train, test, cfg);

  uint64_t expected = 0;
  require(total_iterations(count_orderings(16, 4), 12, 2).fits_u64(&expected), "overflow");
  require(expected == 312, "total_iterations oracle disagrees with 312");
  require(serial.ledger.size() == 312,
          "run count " + std::to_string(serial.ledger.size()) + " != 312");
  require(ledger_csv(serial) == ledger_csv(parallel), "serial and 4-worker ledgers differ");
  for (const auto& run : serial.ledger)
    if (run.epoch == 1)
      require(run.parent_hash == serial.initial_hash, "epoch-1 parent is not the initial checkpoint");
}

void criterion_6_formula_reproduction() {
  require(count_orderings(48, 8).str() == "720", "count_orderings(48,8) != 720");
  require(total_iterations(BigUint(720), 12, 13).str() == "104400",
          "total_iterations(720,12,13) != 104400");
}

void criterion_7_perfect_ordering_spread() {
  testing::FileDataset fx =
      testing::make_mnist01_fixture(work_dir() + "/mnist01", 24, 128, 0.35, 2002);
  require(fx.train.size() == 48, "fixture train size != 48");
  ModelSpec spec;
  SmallConvSpec conv;
  conv.blocks = {{4, 3, 2}};
  spec.arch = conv;
  spec.input_shape = {1, 28, 28};
  spec.num_classes = 2;
  ExplorerConfig cfg;
  cfg.epochs = 1;
  cfg.clusters = 12;
  cfg.workers = 2;
  cfg.train.batch_size = 8;
  cfg.train.seed = 9;
  cfg.train.lr = 0.1;
  ExplorerResult result = explore(spec, fx.train, fx.test, cfg);
  require(result.ledger.size() == 720, "expected the full 720-permutation enumeration");
  const auto& d = result.distributions.at(0);
  const double spread = d.max_acc - d.min_acc;
  require(spread > 0.02, "accuracy spread " + format_double(spread) + " <= 0.02");
  const std::string out = work_dir() + "/mnist01_distribution.csv";
  write_text_file(out, distribution_csv(result));
  const std::string csv = read_text_file(out);
  require(csv.rfind("epoch,min_acc,mean_acc,max_acc,min_loss,max_loss,run_count", 0) == 0,
          "distribution CSV header is not Table-shaped");
}

void criterion_8_poa_equivalence_and_smoke() {
  const auto& fx = cifar_fixture();
  ModelSpec spec = cifar_conv_spec();
  TrainSettings settings = cifar_settings();
  PreprocessConfig pre;

  MetricsLog plain = run_plain_training(spec, settings, pre, fx.train, fx.test);
  PoaRunConfig poa_cfg;
  poa_cfg.train = settings;
  poa_cfg.pre = pre;
  poa_cfg.loader.kappa = 1;
  poa_cfg.loader.scorer = ScorerKind::sample_loss;
  poa_cfg.loader.strategy = StrategyKind::order_ascending;
  MetricsLog kappa1 = run_poa_training(spec, poa_cfg, fx.train, fx.test);
  require(strip_wall_seconds(metrics_csv(kappa1)) == strip_wall_seconds(metrics_csv(plain)),
          "kappa=1 POA metrics differ from the plain loop");

  poa_cfg.loader.kappa = 8;
  MetricsLog kappa8 = run_poa_training(spec, poa_cfg, fx.train, fx.test);
  const double acc = kappa8.rows.back().test_acc;
  require(acc > 0.25, "SampleLoss-ascending kappa=8 test accuracy " + format_double(acc) + " <= 0.25");
}

void criterion_9_cascade_smoke() {
  const auto& fx = cifar_fixture();
  ModelSpec spec = cifar_conv_spec();
  TrainSettings settings = cifar_settings();
  PreprocessConfig pre;

  CascadeConfig cc;
  cc.start_k = 4;
  cc.patience_steps = 60;
  cc.min_delta = 1e-4;
  cc.max_epochs_per_stage = 8;
  SumaugRunResult cascade = run_cascade(spec, settings, pre, cc, fx.train, fx.test);

  // stage sequence K=4 -> 2 -> 1
  std::vector<int> stage_ks;
  for (const auto& e : cascade.log.events)
    if (e.name == "stage_start") stage_ks.push_back(std::stoi(e.detail.substr(2)));
  require(stage_ks == std::vector<int>{4, 2, 1}, "stage sequence is not K=4,2,1");

  // each transition reloaded exactly the stage-best checkpoint
  for (const auto& e : cascade.log.events)
    if (e.name == "stage_transition") {
      const size_t bp = e.detail.find("best_state=");
      const size_t rp = e.detail.find("reloaded_state=");
      require(bp != std::string::npos && rp != std::string::npos, "transition event lacks hashes");
      require(e.detail.substr(bp + 11, 64) == e.detail.substr(rp + 15, 64),
              "reloaded state differs from the stage-best checkpoint");
    }

  // equally-budgeted baseline comparison
  const int64_t cascade_steps = cascade.log.rows.back().step;
  const int steps_per_epoch = static_cast<int>(fx.train.size()) / settings.batch_size;
  TrainSettings base = settings;
  base.loss = LossKind::bce;
  base.epochs = static_cast<int>((cascade_steps + steps_per_epoch - 1) / steps_per_epoch);
  MetricsLog baseline = run_plain_training(spec, base, pre, fx.train, fx.test);
  double cascade_best = 0.0, baseline_best = 0.0;
  for (const auto& r : cascade.log.rows) cascade_best = std::max(cascade_best, r.test_acc);
  for (const auto& r : baseline.rows) baseline_best = std::max(baseline_best, r.test_acc);
  require(cascade_best >= baseline_best - 0.02,
          "cascade best accuracy " + format_double(cascade_best) + " more than 2pp below baseline " +
              format_double(baseline_best));

  // L2-norm series: spikes for the cascade, none for the gradual schedule
  std::vector<double> cascade_norms;
  for (const auto& r : cascade.log.rows) cascade_norms.push_back(r.l2_norm);
  require(!norm_spike_epochs(cascade_norms).empty(), "cascade L2 series shows no transition spikes");

  GradualConfig gc;
  gc.n = 2;
  gc.nr_epochs = 6;
  gc.nr_finetune_epochs = 2;
  TrainSettings gradual_settings = settings;
  gradual_settings.lr = 0.1;  // the schedule spans most of this short budget
  SumaugRunResult gradual = run_gradual_cascade(spec, gradual_settings, pre, gc, fx.train, fx.test);
  std::vector<double> gradual_norms;
  for (const auto& r : gradual.log.rows) gradual_norms.push_back(r.l2_norm);
  auto spikes = norm_spike_epochs(gradual_norms);
  require(spikes.empty(), "gradual L2 series flagged " + std::to_string(spikes.size()) + " spikes");
}

void criterion_10_tta_identity_and_direction() {
  // Low-amplitude class patterns sit within reach of the 8/255 pixel budget,
  // the regime where gradient attacks collapse the plain model.
  testing::FileDataset fx =
      testing::make_cifar_fixture(work_dir() + "/cifar_fragile", 120, 20, 0.04, 1001, 0.10, 0.15);
  fx.train = subset_per_class(fx.train, 100, std::nullopt, 77);
  ModelSpec spec = cifar_conv_spec();
  TrainSettings settings = cifar_settings();
  settings.lr = 0.1;
  PreprocessConfig pre;

  CascadeConfig cc;
  cc.start_k = 4;
  cc.stop_k = 2;
  cc.patience_steps = 60;
  cc.max_epochs_per_stage = 8;
  SumaugRunResult run = run_cascade(spec, settings, pre, cc, fx.train, fx.test);
  Model model = build_model<float>(spec, settings.seed);
  Sgd opt;
  opt.attach(model);
  Rng rng;
  restore(run.final_state, model, opt, rng, nullptr, nullptr);

  TTAConfig identity;
  identity.c = 1;
  identity.lambda = 1.0;
  identity.k = 1;
  for (size_t i = 0; i < 50; ++i) {
    const Tensor& img = fx.test.samples[i].image;
    TTAPrediction pred = tta_predict(model, img, fx.test, identity, pre, i);
    std::vector<size_t> shape{1};
    for (size_t e : img.shape()) shape.push_back(e);
    Tensor batch = Tensor::from(shape, img.values());
    Tensor logits = model.forward(preprocess(batch, pre, nullptr, false));
    require(pred.predicted == argmax_row(logits, 0), "identity TTA disagrees with plain argmax");
    Tensor probs = softmax_probs(logits);
    for (size_t c = 0; c < probs.size(); ++c)
      require(pred.probs[c] == static_cast<double>(probs[c]), "identity TTA probs differ bitwise");
  }

  // PGD(steps=1, alpha=eps) == FGSM bitwise
  const double eps = 8.0 / 255.0;
  for (size_t i = 0; i < 8; ++i) {
    const Tensor& img = fx.test.samples[i].image;
    const int label = fx.test.samples[i].label;
    Tensor a = fgsm(model, img, label, eps, pre);
    Tensor b = pgd(model, img, label, eps, eps, 1, pre);
    require(a.values() == b.values(), "pgd(1, eps) != fgsm bitwise");
  }

  // paired attacked set: TTA accuracy >= plain accuracy
  AttackConfig atk;
  atk.kind = AttackConfig::Kind::fgsm;
  atk.epsilon = eps;
  Dataset attacked = attack_dataset(model, fx.test, atk, pre);
  const double plain_attacked = plain_accuracy(model, attacked, pre);
  TTAConfig robust;  // the paper's robustness configuration
  robust.c = 16;
  robust.lambda = 1.0;
  robust.k = 4;
  robust.seed = 31;
  const double tta_attacked = tta_evaluate(model, attacked, fx.test, robust, pre, 2).accuracy;
  require(tta_attacked >= plain_attacked,
          "TTA accuracy " + format_double(tta_attacked) + " below plain " +
              format_double(plain_attacked) + " on the attacked set");
}

void criterion_11_loader_fidelity() {
  const std::string dir = work_dir() + "/loaders";
  fs::create_directories(dir);

  Dataset cifar = synthetic_images(10, 4, 3, 32, 32, 0.2, 60, 61);
  write_cifar10(dir + "/c1.bin", cifar);
  Dataset cifar_loaded = load_cifar10({dir + "/c1.bin"});
  write_cifar10(dir + "/c2.bin", cifar_loaded);
  require(read_text_file(dir + "/c1.bin") == read_text_file(dir + "/c2.bin"),
          "CIFAR round trip not byte-exact");

  Dataset mnist = synthetic_images(2, 6, 1, 28, 28, 0.2, 62, 63);
  write_mnist_idx(dir + "/m1i", dir + "/m1l", mnist);
  Dataset mnist_loaded = load_mnist_idx(dir + "/m1i", dir + "/m1l");
  write_mnist_idx(dir + "/m2i", dir + "/m2l", mnist_loaded);
  require(read_text_file(dir + "/m1i") == read_text_file(dir + "/m2i"), "IDX images differ");
  require(read_text_file(dir + "/m1l") == read_text_file(dir + "/m2l"), "IDX labels differ");

  // malformed inputs produce the specified errors
  {
    std::vector<uint8_t> bad(3073, 0);
    bad[0] = 11;
    std::ofstream f(dir + "/badlabel.bin", std::ios::binary);
    f.write(reinterpret_cast<const char*>(bad.data()), 3073);
  }
  bool caught = false;
  try {
    (void)load_cifar10({dir + "/badlabel.bin"});
  } catch (const Error& e) {
    caught = e.kind() == ErrorKind::format;
  }
  require(caught, "label byte 11 did not raise a format error");

  {
    std::ofstream f(dir + "/short.bin", std::ios::binary);
    std::vector<uint8_t> bytes(3072, 0);
    f.write(reinterpret_cast<const char*>(bytes.data()), 3072);
  }
  caught = false;
  try {
    (void)load_cifar10({dir + "/short.bin"});
  } catch (const Error& e) {
    caught = e.kind() == ErrorKind::format;
  }
  require(caught, "bad CIFAR length did not raise a format error");

  auto bytes = read_text_file(dir + "/m1i");
  bytes[3] = 0x01;  // image magic 0x00000801
  write_text_file(dir + "/badmagic", bytes);
  caught = false;
  try {
    (void)load_mnist_idx(dir + "/badmagic", dir + "/m1l");
  } catch (const Error& e) {
    caught = e.kind() == ErrorKind::format;
  }
  require(caught, "wrong IDX magic did not raise a format error");
}

// Runs one CLI subcommand twice into the same output dir, capturing artifacts
// between runs; metrics.csv is compared with wall_seconds stripped.
void criterion_12_end_to_end_determinism() {
  const char* cli = std::getenv("ORDLAB_CLI");
  require(cli != nullptr && fs::exists(cli), "ORDLAB_CLI not set or missing; run through ctest");
  const std::string root = work_dir() + "/e2e";
  fs::create_directories(root);

  const std::string plot_input = root + "/metrics_for_plot.csv";
  write_text_file(plot_input, "epoch,acc,loss\n1,0.5,0.9\n2,0.7,0.5\n3,0.8,0.4\n");

  const std::string base_cfg =
      "dataset.kind = blobs\n"
      "dataset.blobs_per_class = 16\n"
      "dataset.blobs_classes = 2\n"
      "train.epochs = 2\n"
      "train.batch_size = 8\n"
      "run.seed = 21\n";
  const std::map<std::string, std::string> subcommand_cfg = {
      {"train", ""},
      {"poa", "poa.kappa = 2\n"},
      {"explore", "explorer.epochs = 2\ntrain.batch_size = 4\ndataset.blobs_per_class = 4\n"},
      {"cascade", "sumaug.start_k = 2\nsumaug.patience = 4\nsumaug.max_epochs_per_stage = 3\n"},
      {"gradual", "sumaug.start_k = 2\nsumaug.nr_epochs = 2\nsumaug.finetune_epochs = 1\n"},
      {"tta", "tta.c = 2\ntta.k = 2\ntrain.epochs = 1\n"},
      {"attack-eval", "attack.kinds = fgsm,pgd\nattack.steps = 2\nattack.limit = 8\ntta.c = 2\n"
                      "train.epochs = 1\n"},
      {"plot", "plot.input = " + plot_input + "\n"},
  };

  auto collect = [](const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = fs::relative(entry.path(), dir).string();
      std::string content = read_text_file(entry.path().string());
      if (rel == "metrics.csv") content = strip_wall_seconds(content);
      files[rel] = std::move(content);
    }
    return files;
  };

  for (const auto& [sub, extra] : subcommand_cfg) {
    const std::string dir = root + "/" + sub;
    fs::create_directories(dir);
    const std::string cfg_path = dir + "/run.cfg";
    const std::string out_dir = dir + "/out";
    write_text_file(cfg_path, base_cfg + extra + "run.output_dir = " + out_dir + "\n");

    auto run_once = [&]() {
      fs::remove_all(out_dir);
      const std::string cmd = std::string("\"") + cli + "\" " + sub + " --config \"" + cfg_path +
                              "\" > \"" + dir + "/stdout.txt\" 2>&1";
      const int rc = std::system(cmd.c_str());
      require(rc == 0, sub + " exited with status " + std::to_string(rc));
      return collect(out_dir);
    };
    auto first = run_once();
    auto second = run_once();
    require(!first.empty(), sub + " produced no artifacts");
    require(first == second, sub + " artifacts differ between identical runs");
  }
}

struct Criterion {
  int id;
  const char* label;
  double budget_seconds;
  std::function<void()> fn;
};

const std::vector<Criterion>& criteria() {
  static std::vector<Criterion> list = {
      {1, "GCC coefficient suite", 1.0, criterion_1_gcc_suite},
      {2, "mixing oracle equivalence", 60.0, criterion_2_mixing_oracle},
      {3, "finite-difference gradient check", 30.0, criterion_3_gradient_check},
      {4, "max-loss-delta rollback exactness", 60.0, criterion_4_rollback},
      {5, "explorer micro-run fan-out", 300.0, criterion_5_explorer_micro},
      {6, "ordering-count formula reproduction", 10.0, criterion_6_formula_reproduction},
      {7, "perfect-ordering accuracy spread", 900.0, criterion_7_perfect_ordering_spread},
      {8, "POA equivalence and smoke accuracy", 1200.0, criterion_8_poa_equivalence_and_smoke},
      {9, "cascade stages, budget parity, norm spikes", 2700.0, criterion_9_cascade_smoke},
      {10, "TTA identity and attacked-set direction", 600.0, criterion_10_tta_identity_and_direction},
      {11, "loader byte fidelity and error paths", 60.0, criterion_11_loader_fidelity},
      {12, "end-to-end subcommand determinism", 600.0, criterion_12_end_to_end_determinism},
  };
  return list;
}

bool run_criterion(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  try {
    c.fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.budget_seconds) {
      std::printf("[FAIL] criterion %2d: %s — runtime %.2fs exceeds %.0fs budget\n", c.id, c.label, secs,
                  c.budget_seconds);
      return false;
    }
    std::printf("[PASS] criterion %2d (%.2fs): %s\n", c.id, secs, c.label);
    return true;
  } catch (const std::exception& e) {
    std::printf("[FAIL] criterion %2d: %s — %s\n", c.id, c.label, e.what());
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failures = 0;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    if (!run_criterion(c)) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
