#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ordlab/config.hpp"
#include "ordlab/metrics.hpp"
#include "ordlab/plot.hpp"
#include "ordlab/runner.hpp"
#include "support/oracles.hpp"

using namespace ordlab;

namespace {

std::string write_config(const std::string& dir, const std::string& name, const std::string& body) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream f(path);
  f << body;
  return path;
}

}  // namespace

TEST_CASE("config: minimal file fills defaults and echoes a resolved copy") {
  const std::string dir = testing::temp_dir("cfg_minimal");
  const std::string path = write_config(dir, "min.cfg",
                                        "# tiny experiment\n"
                                        "run.output_dir = " + dir + "/out\n"
                                        "train.epochs = 2\n");
  ExperimentConfig cfg = parse_config(path);
  CHECK(cfg.get_int("train.epochs") == 2);
  CHECK(cfg.get_double("optim.lr") == 0.05);       // default applied
  CHECK(cfg.get_double("optim.momentum") == 0.9);  // default applied
  CHECK(std::filesystem::exists(dir + "/out/config_resolved.txt"));
}

TEST_CASE("config: misspelled key is rejected by name") {
  const std::string dir = testing::temp_dir("cfg_bad");
  const std::string path = write_config(dir, "bad.cfg", "optim.momentun = 0.9\n");
  try {
    (void)ExperimentConfig::parse_file(path);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("optim.momentun") != std::string::npos);
  }
}

TEST_CASE("config: type and enum violations name the key") {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  CHECK_THROWS_AS(cfg.set("train.epochs", "three"), Error);
  CHECK_THROWS_AS(cfg.set("optim.lr", "fast"), Error);
  CHECK_THROWS_AS(cfg.set("optim.nesterov", "maybe"), Error);
  CHECK_THROWS_AS(cfg.set("dataset.kind", "imagenet"), Error);
}

TEST_CASE("config: echoed config re-parses to the identical resolved config") {
  const std::string dir = testing::temp_dir("cfg_echo");
  const std::string path = write_config(dir, "a.cfg",
                                        "optim.lr = 0.125\n"
                                        "dataset.kind = blobs\n"
                                        "run.seed = 42\n");
  ExperimentConfig original = ExperimentConfig::parse_file(path);
  const std::string echoed = original.echo();
  ExperimentConfig reparsed = ExperimentConfig::parse_text(echoed, "echo");
  CHECK(reparsed.values() == original.values());
  CHECK(reparsed.echo() == echoed);
}

TEST_CASE("plot: two-row CSV renders a two-point polyline") {
  const std::string dir = testing::temp_dir("plot2");
  const std::string csv_path = dir + "/m.csv";
  write_text_file(csv_path, "epoch,loss\n1,0.5\n2,0.25\n");
  auto files = emit_plots(csv_path, dir, {"loss"});
  REQUIRE(files.size() == 1);
  const std::string svg = read_text_file(files[0]);
  const size_t points_pos = svg.find("points=\"");
  REQUIRE(points_pos != std::string::npos);
  const std::string points = svg.substr(points_pos + 8, svg.find('"', points_pos + 8) - points_pos - 8);
  CHECK(std::count(points.begin(), points.end(), ',') == 2);  // two x,y pairs
}

TEST_CASE("plot: identical CSV gives identical SVG bytes") {
  const std::string dir = testing::temp_dir("plot_det");
  write_text_file(dir + "/m.csv", "epoch,acc\n1,0.5\n2,0.75\n3,0.8\n");
  auto a = emit_plots(dir + "/m.csv", dir, {"acc"});
  const std::string first = read_text_file(a[0]);
  auto b = emit_plots(dir + "/m.csv", dir, {"acc"});
  CHECK(read_text_file(b[0]) == first);
}

TEST_CASE("plot: missing column and malformed rows are named") {
  const std::string dir = testing::temp_dir("plot_err");
  write_text_file(dir + "/m.csv", "epoch,acc\n1,0.5\n");
  try {
    (void)emit_plots(dir + "/m.csv", dir, {"loss"});
    FAIL("expected missing-column error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("loss") != std::string::npos);
  }
  write_text_file(dir + "/bad.csv", "epoch,acc\n1,0.5\n2\n");
  try {
    (void)emit_plots(dir + "/bad.csv", dir, {});
    FAIL("expected malformed-row error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("runner: train subcommand twice with one seed gives identical metrics minus wall time") {
  const std::string dir = testing::temp_dir("runner_det");
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.set("run.seed", "11");
  cfg.set("train.epochs", "2");
  cfg.set("dataset.blobs_per_class", "16");
  cfg.set("run.output_dir", dir + "/r1");
  run_subcommand("train", cfg);
  cfg.set("run.output_dir", dir + "/r2");
  run_subcommand("train", cfg);
  const std::string m1 = strip_wall_seconds(read_text_file(dir + "/r1/metrics.csv"));
  const std::string m2 = strip_wall_seconds(read_text_file(dir + "/r2/metrics.csv"));
  CHECK(m1 == m2);
  CHECK(read_text_file(dir + "/r1/events.csv") == read_text_file(dir + "/r2/events.csv"));
  // final checkpoints carry identical bytes
  CHECK(read_text_file(dir + "/r1/final.ckpt") == read_text_file(dir + "/r2/final.ckpt"));
}

TEST_CASE("runner: unknown subcommand and missing referenced files are config errors") {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.set("run.output_dir", testing::temp_dir("runner_err"));
  CHECK_THROWS_AS(run_subcommand("fly", cfg), Error);

  cfg.set("dataset.kind", "cifar10");
  cfg.set("dataset.train_files", "/nonexistent/file.bin");
  cfg.set("dataset.test_files", "/nonexistent/file.bin");
  try {
    run_subcommand("train", cfg);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("/nonexistent/file.bin") != std::string::npos);
  }
}

TEST_CASE("runner: cascade and tta subcommands produce their artifacts") {
  const std::string dir = testing::temp_dir("runner_casc");
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.set("run.seed", "2");
  cfg.set("run.output_dir", dir + "/c");
  cfg.set("dataset.blobs_per_class", "16");
  cfg.set("train.batch_size", "8");
  cfg.set("sumaug.start_k", "2");
  cfg.set("sumaug.patience", "6");
  cfg.set("sumaug.max_epochs_per_stage", "4");
  run_subcommand("cascade", cfg);
  CHECK(std::filesystem::exists(dir + "/c/metrics.csv"));
  CHECK(std::filesystem::exists(dir + "/c/events.csv"));
  CHECK(std::filesystem::exists(dir + "/c/final.ckpt"));

  ExperimentConfig tta_cfg = ExperimentConfig::defaults();
  tta_cfg.set("run.seed", "2");
  tta_cfg.set("run.output_dir", dir + "/t");
  tta_cfg.set("dataset.blobs_per_class", "8");
  tta_cfg.set("train.epochs", "1");
  tta_cfg.set("tta.c", "2");
  tta_cfg.set("tta.k", "2");
  run_subcommand("tta", tta_cfg);
  CHECK(std::filesystem::exists(dir + "/t/tta.csv"));
}
