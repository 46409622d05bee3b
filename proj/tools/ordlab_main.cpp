// ordlab command-line runner. Talks to the library strictly through the C API.
#include <stdio.h>
#include <string.h>

#include <string>
#include <vector>

#include "ordlab/ordlab.h"

namespace {

const char* kUsage =
    "usage: ordlab <subcommand> --config <path> [--seed N] [--workers N] [--out DIR]\n"
    "\n"
    "subcommands:\n"
    "  train        plain seeded training run\n"
    "  explore      brute-force batch-permutation search with k-means pruning\n"
    "  poa          perfect-ordering-approximation training loop\n"
    "  cascade      cascading sum augmentation (K halves on plateau)\n"
    "  gradual      gradually cascading sum augmentation (GCC schedule)\n"
    "  tta          test-time sum augmentation evaluation\n"
    "  attack-eval  FGSM/PGD robustness table, with and without TTA\n"
    "  plot         SVG line charts from a metrics CSV\n"
    "\n"
    "exit status: 0 success, 1 config error, 2 runtime error, 3 budget refusal\n"
    "environment: ORDLAB_WORKERS provides the worker default\n";

int fail_usage(const char* msg) {
  fprintf(stderr, "ordlab: %s\n\n%s", msg, kUsage);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return fail_usage("missing subcommand");
  const std::string subcommand = argv[1];
  if (subcommand == "--help" || subcommand == "-h" || subcommand == "help") {
    fputs(kUsage, stdout);
    return 0;
  }

  const char* config_path = nullptr;
  const char* seed = nullptr;
  const char* workers = nullptr;
  const char* out_dir = nullptr;
  for (int i = 2; i < argc; ++i) {
    auto next = [&](const char* flag) -> const char* {
      if (i + 1 >= argc) {
        fprintf(stderr, "ordlab: %s needs a value\n", flag);
        return nullptr;
      }
      return argv[++i];
    };
    if (strcmp(argv[i], "--config") == 0) {
      if (!(config_path = next("--config"))) return 1;
    } else if (strcmp(argv[i], "--seed") == 0) {
      if (!(seed = next("--seed"))) return 1;
    } else if (strcmp(argv[i], "--workers") == 0) {
      if (!(workers = next("--workers"))) return 1;
    } else if (strcmp(argv[i], "--out") == 0) {
      if (!(out_dir = next("--out"))) return 1;
    } else {
      return fail_usage((std::string("unknown option '") + argv[i] + "'").c_str());
    }
  }
  if (!config_path) return fail_usage("--config is required");

  ordlab_config* cfg = nullptr;
  ordlab_status st = ordlab_config_load(config_path, &cfg);
  if (st != ORDLAB_OK) {
    fprintf(stderr, "ordlab: %s\n", ordlab_last_error());
    return st == ORDLAB_ERR_INVALID ? 2 : (int)st;
  }

  struct Override {
    const char* key;
    const char* value;
  };
  std::vector<Override> overrides;
  if (seed) overrides.push_back({"run.seed", seed});
  if (workers) overrides.push_back({"run.workers", workers});
  if (out_dir) overrides.push_back({"run.output_dir", out_dir});
  for (const auto& o : overrides) {
    st = ordlab_config_set(cfg, o.key, o.value);
    if (st != ORDLAB_OK) {
      fprintf(stderr, "ordlab: %s\n", ordlab_last_error());
      ordlab_config_free(cfg);
      return st == ORDLAB_ERR_INVALID ? 2 : (int)st;
    }
  }

  st = ordlab_run(cfg, subcommand.c_str());
  if (st != ORDLAB_OK) {
    fprintf(stderr, "ordlab: %s\n", ordlab_last_error());
  } else {
    char out_buf[512];
    if (ordlab_config_get(cfg, "run.output_dir", out_buf, sizeof(out_buf)) == ORDLAB_OK)
      printf("ordlab: %s done, artifacts in %s\n", subcommand.c_str(), out_buf);
  }
  ordlab_config_free(cfg);
  return st == ORDLAB_ERR_INVALID ? 2 : (int)st;
}
