#include "ordlab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ordlab/errors.hpp"
#include "ordlab/metrics.hpp"

namespace ordlab {

namespace {

enum class KeyType { string_t, int_t, double_t, bool_t, enum_t };

struct KeySpec {
  const char* name;
  KeyType type;
  const char* default_value;
  const char* choices;  // pipe-separated for enum_t
};

// The whole schema. Values stay as validated strings; typed getters convert.
const KeySpec kSchema[] = {
    {"run.seed", KeyType::int_t, "1", nullptr},
    {"run.output_dir", KeyType::string_t, "out", nullptr},
    {"run.workers", KeyType::int_t, "0", nullptr},
    {"run.checkpoint", KeyType::string_t, "", nullptr},

    {"dataset.kind", KeyType::enum_t, "blobs", "blobs|images|cifar10|mnist"},
    {"dataset.train_files", KeyType::string_t, "", nullptr},
    {"dataset.test_files", KeyType::string_t, "", nullptr},
    {"dataset.mnist_train_images", KeyType::string_t, "", nullptr},
    {"dataset.mnist_train_labels", KeyType::string_t, "", nullptr},
    {"dataset.mnist_test_images", KeyType::string_t, "", nullptr},
    {"dataset.mnist_test_labels", KeyType::string_t, "", nullptr},
    {"dataset.per_class", KeyType::int_t, "0", nullptr},
    {"dataset.classes", KeyType::string_t, "", nullptr},
    {"dataset.blobs_classes", KeyType::int_t, "2", nullptr},
    {"dataset.blobs_per_class", KeyType::int_t, "32", nullptr},
    {"dataset.blobs_test_per_class", KeyType::int_t, "32", nullptr},
    {"dataset.blobs_dims", KeyType::int_t, "8", nullptr},
    {"dataset.blobs_separation", KeyType::double_t, "6", nullptr},
    {"dataset.images_classes", KeyType::int_t, "10", nullptr},
    {"dataset.images_per_class", KeyType::int_t, "100", nullptr},
    {"dataset.images_test_per_class", KeyType::int_t, "20", nullptr},
    {"dataset.images_channels", KeyType::int_t, "3", nullptr},
    {"dataset.images_size", KeyType::int_t, "32", nullptr},
    {"dataset.images_noise", KeyType::double_t, "0.15", nullptr},

    {"pre.mean", KeyType::string_t, "0", nullptr},
    {"pre.std", KeyType::string_t, "1", nullptr},
    {"pre.flip_prob", KeyType::double_t, "0", nullptr},
    {"pre.crop_pad", KeyType::int_t, "0", nullptr},

    {"model.arch", KeyType::enum_t, "mlp", "mlp|conv"},
    {"model.hidden", KeyType::string_t, "32", nullptr},
    {"model.activation", KeyType::enum_t, "relu", "relu|tanh"},
    {"model.conv_blocks", KeyType::string_t, "8:3:1,16:3:1", nullptr},
    {"model.pooling", KeyType::enum_t, "max", "max|avg"},
    {"model.classifier_width", KeyType::int_t, "0", nullptr},
    {"model.loss", KeyType::enum_t, "ce", "ce|bce"},

    {"optim.lr", KeyType::double_t, "0.05", nullptr},
    {"optim.momentum", KeyType::double_t, "0.9", nullptr},
    {"optim.weight_decay", KeyType::double_t, "0.0001", nullptr},
    {"optim.nesterov", KeyType::bool_t, "true", nullptr},
    {"optim.lr_schedule", KeyType::enum_t, "none", "none|halve_every|plateau"},
    {"optim.lr_halve_every", KeyType::int_t, "30", nullptr},
    {"optim.lr_plateau_patience", KeyType::int_t, "300", nullptr},
    {"optim.lr_factor", KeyType::double_t, "0.5", nullptr},
    {"optim.lr_min_delta", KeyType::double_t, "0.0001", nullptr},

    {"train.epochs", KeyType::int_t, "3", nullptr},
    {"train.batch_size", KeyType::int_t, "8", nullptr},
    {"train.eval_batch", KeyType::int_t, "256", nullptr},

    {"poa.scorer", KeyType::enum_t, "sample_loss", "sample_loss|max_loss_delta_same|max_loss_delta_external"},
    {"poa.delta_mode", KeyType::enum_t, "absolute", "absolute|relative"},
    {"poa.strategy", KeyType::enum_t, "order_ascending",
     "order_ascending|order_descending|sample_direct|sample_inverse"},
    {"poa.rescore", KeyType::enum_t, "per_step", "per_step|per_epoch"},
    {"poa.item", KeyType::enum_t, "batch", "batch|sample"},
    {"poa.kappa", KeyType::int_t, "8", nullptr},
    {"poa.external_size", KeyType::int_t, "512", nullptr},
    {"poa.resample_per_epoch", KeyType::bool_t, "true", nullptr},
    {"poa.epsilon", KeyType::double_t, "1e-8", nullptr},

    {"explorer.epochs", KeyType::int_t, "1", nullptr},
    {"explorer.clusters", KeyType::int_t, "12", nullptr},
    {"explorer.max_runs", KeyType::int_t, "200000", nullptr},

    {"sumaug.start_k", KeyType::int_t, "4", nullptr},
    {"sumaug.stop_k", KeyType::int_t, "1", nullptr},
    {"sumaug.patience", KeyType::int_t, "300", nullptr},
    {"sumaug.min_delta", KeyType::double_t, "0.0001", nullptr},
    {"sumaug.max_epochs_per_stage", KeyType::int_t, "50", nullptr},
    {"sumaug.coeff_source", KeyType::enum_t, "average", "average|beta|uniform"},
    {"sumaug.beta_alpha", KeyType::double_t, "0.2", nullptr},
    {"sumaug.nr_epochs", KeyType::int_t, "8", nullptr},
    {"sumaug.finetune_epochs", KeyType::int_t, "2", nullptr},

    {"tta.c", KeyType::int_t, "16", nullptr},
    {"tta.lambda", KeyType::double_t, "1.0", nullptr},
    {"tta.k", KeyType::int_t, "4", nullptr},
    {"tta.pool", KeyType::enum_t, "test", "test|train"},
    {"tta.normalize", KeyType::bool_t, "false", nullptr},
    {"tta.limit", KeyType::int_t, "0", nullptr},

    {"attack.kinds", KeyType::string_t, "fgsm", nullptr},
    {"attack.epsilon", KeyType::double_t, "0.03137254901960784", nullptr},
    {"attack.alpha", KeyType::double_t, "0.00784313725490196", nullptr},
    {"attack.steps", KeyType::int_t, "10", nullptr},
    {"attack.limit", KeyType::int_t, "0", nullptr},

    {"plot.input", KeyType::string_t, "", nullptr},
    {"plot.columns", KeyType::string_t, "", nullptr},
};

const KeySpec* find_key(const std::string& key) {
  for (const auto& spec : kSchema)
    if (key == spec.name) return &spec;
  return nullptr;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void validate_value(const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case KeyType::string_t:
      return;
    case KeyType::int_t: {
      errno = 0;
      char* end = nullptr;
      (void)std::strtoll(value.c_str(), &end, 10);
      if (errno != 0 || end == value.c_str() || *end != '\0')
        fail(ErrorKind::config, std::string("config: key '") + spec.name + "' expects an integer, got '" +
                                    value + "'");
      return;
    }
    case KeyType::double_t: {
      errno = 0;
      char* end = nullptr;
      (void)std::strtod(value.c_str(), &end);
      if (errno != 0 || end == value.c_str() || *end != '\0')
        fail(ErrorKind::config,
             std::string("config: key '") + spec.name + "' expects a number, got '" + value + "'");
      return;
    }
    case KeyType::bool_t: {
      if (value != "true" && value != "false" && value != "1" && value != "0")
        fail(ErrorKind::config,
             std::string("config: key '") + spec.name + "' expects true/false, got '" + value + "'");
      return;
    }
    case KeyType::enum_t: {
      std::string choices = spec.choices;
      size_t pos = 0;
      while (pos != std::string::npos) {
        size_t next = choices.find('|', pos);
        std::string choice =
            next == std::string::npos ? choices.substr(pos) : choices.substr(pos, next - pos);
        if (value == choice) return;
        pos = next == std::string::npos ? next : next + 1;
      }
      fail(ErrorKind::config, std::string("config: key '") + spec.name + "' must be one of [" +
                                  spec.choices + "], got '" + value + "'");
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  for (const auto& spec : kSchema) cfg.values_[spec.name] = spec.default_value;
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg = defaults();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::config,
           "config: " + origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    cfg.set(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::config, "config: cannot open file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str(), path);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (!spec) fail(ErrorKind::config, "config: unknown key '" + key + "'");
  validate_value(*spec, value);
  values_[key] = value;
}

const std::string& ExperimentConfig::get_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::config, "config: unknown key '" + key + "'");
  return it->second;
}

int64_t ExperimentConfig::get_int(const std::string& key) const {
  return std::strtoll(get_str(key).c_str(), nullptr, 10);
}

double ExperimentConfig::get_double(const std::string& key) const {
  return std::strtod(get_str(key).c_str(), nullptr);
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string& v = get_str(key);
  return v == "true" || v == "1";
}

std::vector<std::string> ExperimentConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const std::string& raw = get_str(key);
  std::string cur;
  for (char c : raw) {
    if (c == ',') {
      cur = trim(cur);
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) out.push_back(std::strtod(item.c_str(), nullptr));
  return out;
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : get_list(key)) out.push_back(static_cast<int>(std::strtoll(item.c_str(), nullptr, 10)));
  return out;
}

bool ExperimentConfig::has_value(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string ExperimentConfig::echo() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

void ExperimentConfig::validate_files(const std::string& subcommand) const {
  auto check = [&](const std::string& key) {
    if (!has_value(key)) return;
    for (const auto& path : get_list(key))
      if (!std::filesystem::exists(path))
        fail(ErrorKind::config, "config: key '" + key + "' references a missing file: " + path);
  };
  const std::string kind = get_str("dataset.kind");
  if (subcommand != "plot") {
    if (kind == "cifar10") {
      if (!has_value("dataset.train_files") || !has_value("dataset.test_files"))
        fail(ErrorKind::config, "config: dataset.kind=cifar10 needs dataset.train_files and dataset.test_files");
      check("dataset.train_files");
      check("dataset.test_files");
    } else if (kind == "mnist") {
      for (const char* key : {"dataset.mnist_train_images", "dataset.mnist_train_labels",
                              "dataset.mnist_test_images", "dataset.mnist_test_labels"}) {
        if (!has_value(key)) fail(ErrorKind::config, std::string("config: dataset.kind=mnist needs ") + key);
        check(key);
      }
    }
  }
  check("run.checkpoint");
  if (subcommand == "plot") {
    if (!has_value("plot.input")) fail(ErrorKind::config, "config: plot needs plot.input");
    check("plot.input");
  }
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail(ErrorKind::runtime, "cannot create directory: " + path);
}

ExperimentConfig parse_config(const std::string& path) {
  ExperimentConfig cfg = ExperimentConfig::parse_file(path);
  const std::string out_dir = cfg.get_str("run.output_dir");
  ensure_directory(out_dir);
  write_text_file(out_dir + "/config_resolved.txt", cfg.echo());
  return cfg;
}

}  // namespace ordlab
