#include "ordlab/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "ordlab/explorer.hpp"
#include "ordlab/metrics.hpp"
#include "ordlab/plot.hpp"
#include "ordlab/poa.hpp"
#include "ordlab/sumaug.hpp"
#include "ordlab/tta.hpp"

namespace ordlab {

namespace {

std::optional<std::set<int>> classes_from_config(const ExperimentConfig& cfg) {
  if (!cfg.has_value("dataset.classes")) return std::nullopt;
  auto list = cfg.get_int_list("dataset.classes");
  return std::set<int>(list.begin(), list.end());
}

Dataset maybe_subset(const ExperimentConfig& cfg, Dataset ds) {
  const int per_class = static_cast<int>(cfg.get_int("dataset.per_class"));
  auto classes = classes_from_config(cfg);
  if (per_class > 0) return subset_per_class(ds, per_class, classes, cfg.get_int("run.seed"));
  if (classes) {
    Dataset filtered;
    filtered.num_classes = ds.num_classes;
    filtered.provenance = ds.provenance + "|classes";
    for (auto& s : ds.samples)
      if (classes->count(s.label)) filtered.samples.push_back(std::move(s));
    if (filtered.samples.empty()) fail(ErrorKind::config, "dataset.classes selected no samples");
    return filtered;
  }
  return ds;
}

}  // namespace

DataBundle load_data(const ExperimentConfig& cfg) {
  const std::string kind = cfg.get_str("dataset.kind");
  const uint64_t seed = cfg.get_int("run.seed");
  DataBundle out;
  if (kind == "blobs") {
    const uint64_t structure = derive_seed(seed, "blobs-structure");
    out.train = synthetic_blobs(cfg.get_int("dataset.blobs_classes"), cfg.get_int("dataset.blobs_per_class"),
                                cfg.get_int("dataset.blobs_dims"), cfg.get_double("dataset.blobs_separation"),
                                structure, derive_seed(seed, "blobs-train"));
    out.test = synthetic_blobs(cfg.get_int("dataset.blobs_classes"),
                               cfg.get_int("dataset.blobs_test_per_class"), cfg.get_int("dataset.blobs_dims"),
                               cfg.get_double("dataset.blobs_separation"), structure,
                               derive_seed(seed, "blobs-test"));
  } else if (kind == "images") {
    const int classes = static_cast<int>(cfg.get_int("dataset.images_classes"));
    const int channels = static_cast<int>(cfg.get_int("dataset.images_channels"));
    const int size = static_cast<int>(cfg.get_int("dataset.images_size"));
    const double noise = cfg.get_double("dataset.images_noise");
    const uint64_t structure = derive_seed(seed, "images-structure");
    out.train = synthetic_images(classes, cfg.get_int("dataset.images_per_class"), channels, size, size,
                                 noise, structure, derive_seed(seed, "images-train"));
    out.test = synthetic_images(classes, cfg.get_int("dataset.images_test_per_class"), channels, size, size,
                                noise, structure, derive_seed(seed, "images-test"));
  } else if (kind == "cifar10") {
    out.train = load_cifar10(cfg.get_list("dataset.train_files"));
    out.test = load_cifar10(cfg.get_list("dataset.test_files"));
  } else if (kind == "mnist") {
    out.train = load_mnist_idx(cfg.get_str("dataset.mnist_train_images"),
                               cfg.get_str("dataset.mnist_train_labels"));
    out.test = load_mnist_idx(cfg.get_str("dataset.mnist_test_images"),
                              cfg.get_str("dataset.mnist_test_labels"));
  } else {
    fail(ErrorKind::config, "unknown dataset.kind: " + kind);
  }
  out.train = maybe_subset(cfg, std::move(out.train));
  return out;
}

ModelSpec model_spec_from_config(const ExperimentConfig& cfg, const Dataset& train_ds) {
  ModelSpec spec;
  spec.input_shape = train_ds.image_shape();
  spec.num_classes = train_ds.num_classes;
  const std::string arch = cfg.get_str("model.arch");
  if (arch == "mlp") {
    MlpSpec mlp;
    mlp.hidden = cfg.get_int_list("model.hidden");
    mlp.act = cfg.get_str("model.activation") == "tanh" ? Activation::tanh : Activation::relu;
    spec.arch = mlp;
  } else {
    SmallConvSpec conv;
    conv.pooling = cfg.get_str("model.pooling") == "avg" ? Pooling::avg : Pooling::max;
    conv.classifier_width = static_cast<int>(cfg.get_int("model.classifier_width"));
    for (const auto& block : cfg.get_list("model.conv_blocks")) {
      ConvBlockSpec b;
      if (std::sscanf(block.c_str(), "%d:%d:%d", &b.channels, &b.kernel, &b.stride) != 3)
        fail(ErrorKind::config, "model.conv_blocks: expected channels:kernel:stride, got '" + block + "'");
      conv.blocks.push_back(b);
    }
    spec.arch = conv;
  }
  return spec;
}

TrainSettings train_settings_from_config(const ExperimentConfig& cfg) {
  TrainSettings s;
  s.epochs = static_cast<int>(cfg.get_int("train.epochs"));
  s.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  s.loss = cfg.get_str("model.loss") == "bce" ? LossKind::bce : LossKind::softmax_ce;
  s.lr = cfg.get_double("optim.lr");
  s.momentum = cfg.get_double("optim.momentum");
  s.weight_decay = cfg.get_double("optim.weight_decay");
  s.nesterov = cfg.get_bool("optim.nesterov");
  const std::string schedule = cfg.get_str("optim.lr_schedule");
  s.schedule = schedule == "halve_every"  ? LrScheduleKind::halve_every
               : schedule == "plateau"    ? LrScheduleKind::plateau
                                          : LrScheduleKind::none;
  s.lr_halve_every = static_cast<int>(cfg.get_int("optim.lr_halve_every"));
  s.lr_plateau_patience = static_cast<int>(cfg.get_int("optim.lr_plateau_patience"));
  s.lr_factor = cfg.get_double("optim.lr_factor");
  s.lr_min_delta = cfg.get_double("optim.lr_min_delta");
  s.eval_batch = static_cast<int>(cfg.get_int("train.eval_batch"));
  s.seed = cfg.get_int("run.seed");
  return s;
}

PreprocessConfig preprocess_from_config(const ExperimentConfig& cfg) {
  PreprocessConfig pre;
  pre.mean.clear();
  pre.stdev.clear();
  for (double v : cfg.get_double_list("pre.mean")) pre.mean.push_back(static_cast<float>(v));
  for (double v : cfg.get_double_list("pre.std")) pre.stdev.push_back(static_cast<float>(v));
  if (pre.mean.empty()) pre.mean.push_back(0.0f);
  if (pre.stdev.empty()) pre.stdev.push_back(1.0f);
  pre.flip_prob = static_cast<float>(cfg.get_double("pre.flip_prob"));
  pre.crop_pad = static_cast<int>(cfg.get_int("pre.crop_pad"));
  return pre;
}

int resolve_workers(const ExperimentConfig& cfg) {
  int workers = static_cast<int>(cfg.get_int("run.workers"));
  if (workers <= 0) {
    if (const char* env = std::getenv("ORDLAB_WORKERS")) workers = std::atoi(env);
  }
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, workers);
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void stamp_wall(MetricsLog& log, const Timer& timer) {
  const double t = timer.seconds();
  for (auto& row : log.rows)
    if (row.wall_seconds == 0.0) row.wall_seconds = t;
}

void write_run_artifacts(const std::string& out_dir, const MetricsLog& log) {
  write_text_file(out_dir + "/metrics.csv", metrics_csv(log));
  write_text_file(out_dir + "/events.csv", events_csv(log));
}

// A trained model for the inference subcommands: loads run.checkpoint when
// given, otherwise trains per the train.* settings.
Checkpoint obtain_model_state(const ExperimentConfig& cfg, const ModelSpec& spec, const DataBundle& data,
                              const TrainSettings& settings, const PreprocessConfig& pre) {
  if (cfg.has_value("run.checkpoint")) return Checkpoint::load_file(cfg.get_str("run.checkpoint"));
  Checkpoint final_state;
  run_plain_training(spec, settings, pre, data.train, data.test, &final_state);
  return final_state;
}

}  // namespace

void run_subcommand(const std::string& subcommand, const ExperimentConfig& cfg) {
  cfg.validate_files(subcommand);
  const std::string out_dir = cfg.get_str("run.output_dir");
  ensure_directory(out_dir);
  write_text_file(out_dir + "/config_resolved.txt", cfg.echo());

  Timer timer;

  if (subcommand == "plot") {
    emit_plots(cfg.get_str("plot.input"), out_dir, cfg.get_list("plot.columns"));
    return;
  }

  DataBundle data = load_data(cfg);
  ModelSpec spec = model_spec_from_config(cfg, data.train);
  TrainSettings settings = train_settings_from_config(cfg);
  PreprocessConfig pre = preprocess_from_config(cfg);
  const int workers = resolve_workers(cfg);

  if (subcommand == "train") {
    Checkpoint final_state;
    MetricsLog log = run_plain_training(spec, settings, pre, data.train, data.test, &final_state);
    stamp_wall(log, timer);
    write_run_artifacts(out_dir, log);
    final_state.save_file(out_dir + "/final.ckpt");
    return;
  }

  if (subcommand == "poa") {
    PoaRunConfig poa_cfg;
    poa_cfg.train = settings;
    poa_cfg.pre = pre;
    LoaderConfig& loader = poa_cfg.loader;
    const std::string scorer = cfg.get_str("poa.scorer");
    loader.scorer = scorer == "max_loss_delta_same"       ? ScorerKind::max_loss_delta_same
                    : scorer == "max_loss_delta_external" ? ScorerKind::max_loss_delta_external
                                                          : ScorerKind::sample_loss;
    loader.delta_mode =
        cfg.get_str("poa.delta_mode") == "relative" ? DeltaMode::relative : DeltaMode::absolute;
    const std::string strategy = cfg.get_str("poa.strategy");
    loader.strategy = strategy == "order_descending"  ? StrategyKind::order_descending
                      : strategy == "sample_direct"   ? StrategyKind::sample_direct
                      : strategy == "sample_inverse"  ? StrategyKind::sample_inverse
                                                      : StrategyKind::order_ascending;
    loader.rescore =
        cfg.get_str("poa.rescore") == "per_epoch" ? RescorePolicy::per_epoch : RescorePolicy::per_step;
    loader.item_kind = cfg.get_str("poa.item") == "sample" ? ItemKind::single : ItemKind::batch;
    loader.kappa = static_cast<int>(cfg.get_int("poa.kappa"));
    loader.external_size = static_cast<int>(cfg.get_int("poa.external_size"));
    loader.resample_per_epoch = cfg.get_bool("poa.resample_per_epoch");
    loader.epsilon = cfg.get_double("poa.epsilon");
    MetricsLog log = run_poa_training(spec, poa_cfg, data.train, data.test);
    stamp_wall(log, timer);
    write_run_artifacts(out_dir, log);
    return;
  }

  if (subcommand == "explore") {
    ExplorerConfig ex;
    ex.epochs = static_cast<int>(cfg.get_int("explorer.epochs"));
    ex.clusters = static_cast<int>(cfg.get_int("explorer.clusters"));
    ex.max_runs = static_cast<uint64_t>(cfg.get_int("explorer.max_runs"));
    ex.workers = workers;
    ex.train = settings;
    ex.pre = pre;
    ExplorerResult result = explore(spec, data.train, data.test, ex);
    write_text_file(out_dir + "/ledger.csv", ledger_csv(result));
    write_text_file(out_dir + "/distribution.csv", distribution_csv(result));
    return;
  }

  if (subcommand == "cascade" || subcommand == "gradual") {
    SumaugRunResult result;
    if (subcommand == "cascade") {
      CascadeConfig cc;
      cc.start_k = static_cast<int>(cfg.get_int("sumaug.start_k"));
      cc.stop_k = static_cast<int>(cfg.get_int("sumaug.stop_k"));
      cc.patience_steps = static_cast<int>(cfg.get_int("sumaug.patience"));
      cc.min_delta = cfg.get_double("sumaug.min_delta");
      cc.max_epochs_per_stage = static_cast<int>(cfg.get_int("sumaug.max_epochs_per_stage"));
      result = run_cascade(spec, settings, pre, cc, data.train, data.test);
    } else {
      GradualConfig gc;
      gc.n = static_cast<int>(cfg.get_int("sumaug.start_k"));
      gc.nr_epochs = static_cast<int>(cfg.get_int("sumaug.nr_epochs"));
      gc.nr_finetune_epochs = static_cast<int>(cfg.get_int("sumaug.finetune_epochs"));
      result = run_gradual_cascade(spec, settings, pre, gc, data.train, data.test);
    }
    stamp_wall(result.log, timer);
    write_run_artifacts(out_dir, result.log);
    result.final_state.save_file(out_dir + "/final.ckpt");
    return;
  }

  if (subcommand == "tta" || subcommand == "attack-eval") {
    Checkpoint state = obtain_model_state(cfg, spec, data, settings, pre);
    Model model = build_model<float>(spec, settings.seed);
    Sgd opt;
    opt.attach(model);
    Rng rng;
    restore(state, model, opt, rng, nullptr, nullptr);

    TTAConfig tta_cfg;
    tta_cfg.c = static_cast<int>(cfg.get_int("tta.c"));
    tta_cfg.lambda = cfg.get_double("tta.lambda");
    tta_cfg.k = static_cast<int>(cfg.get_int("tta.k"));
    tta_cfg.pool_train = cfg.get_str("tta.pool") == "train";
    tta_cfg.normalize_coefficients = cfg.get_bool("tta.normalize");
    tta_cfg.seed = cfg.get_int("run.seed");
    const Dataset& pool = tta_cfg.pool_train ? data.train : data.test;

    if (subcommand == "tta") {
      const int limit = static_cast<int>(cfg.get_int("tta.limit"));
      TTAEvaluation eval = tta_evaluate(model, data.test, pool, tta_cfg, pre, workers, limit);
      const double plain = plain_accuracy(model, data.test, pre);
      std::string csv = "scope,count,accuracy\n";
      csv += "plain_overall," + std::to_string(limit > 0 ? std::min<size_t>(data.test.size(), limit)
                                                         : data.test.size()) +
             ',' + format_double(plain) + '\n';
      size_t total = 0;
      for (int c : eval.per_class_count) total += static_cast<size_t>(c);
      csv += "tta_overall," + std::to_string(total) + ',' + format_double(eval.accuracy) + '\n';
      for (size_t c = 0; c < eval.per_class_acc.size(); ++c)
        csv += "tta_class_" + std::to_string(c) + ',' + std::to_string(eval.per_class_count[c]) + ',' +
               format_double(eval.per_class_acc[c]) + '\n';
      write_text_file(out_dir + "/tta.csv", csv);
      return;
    }

    std::vector<AttackConfig> attacks;
    for (const auto& kind : cfg.get_list("attack.kinds")) {
      AttackConfig atk;
      if (kind == "fgsm") {
        atk.kind = AttackConfig::Kind::fgsm;
      } else if (kind == "pgd") {
        atk.kind = AttackConfig::Kind::pgd;
      } else {
        fail(ErrorKind::config, "attack.kinds: unknown attack '" + kind + "'");
      }
      atk.epsilon = cfg.get_double("attack.epsilon");
      atk.alpha = cfg.get_double("attack.alpha");
      atk.steps = static_cast<int>(cfg.get_int("attack.steps"));
      attacks.push_back(atk);
    }
    const int limit = static_cast<int>(cfg.get_int("attack.limit"));
    RobustnessReport report =
        robustness_eval(model, data.test, pool, attacks, tta_cfg.c > 0 ? &tta_cfg : nullptr, pre, workers,
                        limit);
    write_text_file(out_dir + "/robustness.csv", robustness_csv(report));
    return;
  }

  fail(ErrorKind::config, "unknown subcommand: " + subcommand);
}

}  // namespace ordlab
