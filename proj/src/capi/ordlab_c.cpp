#include "ordlab/ordlab.h"

#include <cstring>
#include <string>

#include "ordlab/bigint.hpp"
#include "ordlab/config.hpp"
#include "ordlab/errors.hpp"
#include "ordlab/explorer.hpp"
#include "ordlab/runner.hpp"
#include "ordlab/sumaug.hpp"

struct ordlab_config {
  ordlab::ExperimentConfig impl;
};

namespace {

thread_local std::string g_last_error;

ordlab_status status_for(const ordlab::Error& e) {
  switch (e.kind()) {
    case ordlab::ErrorKind::config:
      return ORDLAB_ERR_CONFIG;
    case ordlab::ErrorKind::budget:
      return ORDLAB_ERR_BUDGET;
    default:
      return ORDLAB_ERR_RUNTIME;
  }
}

template <class Fn>
ordlab_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ORDLAB_OK;
  } catch (const ordlab::Error& e) {
    g_last_error = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ORDLAB_ERR_RUNTIME;
  }
}

ordlab_status copy_out(const std::string& s, char* buf, size_t buf_size) {
  if (!buf || buf_size == 0) {
    g_last_error = "output buffer is null or empty";
    return ORDLAB_ERR_INVALID;
  }
  if (s.size() + 1 > buf_size) {
    g_last_error = "output buffer too small (" + std::to_string(s.size() + 1) + " bytes needed)";
    return ORDLAB_ERR_INVALID;
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return ORDLAB_OK;
}

}  // namespace

extern "C" {

const char* ordlab_version(void) { return "0.1.0"; }

const char* ordlab_last_error(void) { return g_last_error.c_str(); }

ordlab_status ordlab_config_create(ordlab_config** out) {
  if (!out) return ORDLAB_ERR_INVALID;
  return guarded([&] { *out = new ordlab_config{ordlab::ExperimentConfig::defaults()}; });
}

ordlab_status ordlab_config_load(const char* path, ordlab_config** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return ORDLAB_ERR_INVALID;
  }
  return guarded([&] { *out = new ordlab_config{ordlab::ExperimentConfig::parse_file(path)}; });
}

ordlab_status ordlab_config_set(ordlab_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "null argument";
    return ORDLAB_ERR_INVALID;
  }
  return guarded([&] { cfg->impl.set(key, value); });
}

ordlab_status ordlab_config_get(const ordlab_config* cfg, const char* key, char* buf, size_t buf_size) {
  if (!cfg || !key) {
    g_last_error = "null argument";
    return ORDLAB_ERR_INVALID;
  }
  std::string value;
  ordlab_status st = guarded([&] { value = cfg->impl.get_str(key); });
  if (st != ORDLAB_OK) return st;
  return copy_out(value, buf, buf_size);
}

void ordlab_config_free(ordlab_config* cfg) { delete cfg; }

ordlab_status ordlab_run(ordlab_config* cfg, const char* subcommand) {
  if (!cfg || !subcommand) {
    g_last_error = "null argument";
    return ORDLAB_ERR_INVALID;
  }
  return guarded([&] { ordlab::run_subcommand(subcommand, cfg->impl); });
}

ordlab_status ordlab_gcc(uint32_t n, double t, double* coeffs) {
  if (!coeffs) {
    g_last_error = "null coefficient buffer";
    return ORDLAB_ERR_INVALID;
  }
  return guarded([&] {
    ordlab::CoefficientVector cv = ordlab::gcc(static_cast<int>(n), t);
    for (uint32_t i = 0; i < n; ++i) coeffs[i] = cv.weights[i];
  });
}

ordlab_status ordlab_count_orderings(uint64_t samples, uint64_t batch_size, char* buf, size_t buf_size) {
  std::string s;
  ordlab_status st = guarded([&] { s = ordlab::count_orderings(samples, batch_size).str(); });
  if (st != ORDLAB_OK) return st;
  return copy_out(s, buf, buf_size);
}

ordlab_status ordlab_total_iterations(uint64_t perms_per_epoch, uint64_t clusters, uint64_t epochs,
                                      char* buf, size_t buf_size) {
  std::string s;
  ordlab_status st = guarded(
      [&] { s = ordlab::total_iterations(ordlab::BigUint(perms_per_epoch), clusters, epochs).str(); });
  if (st != ORDLAB_OK) return st;
  return copy_out(s, buf, buf_size);
}

ordlab_status ordlab_domain_size(uint64_t dataset_size, uint64_t k, char* buf, size_t buf_size) {
  std::string s;
  ordlab_status st = guarded([&] { s = ordlab::domain_size(dataset_size, k).str(); });
  if (st != ORDLAB_OK) return st;
  return copy_out(s, buf, buf_size);
}

ordlab_status ordlab_total_domain_size(uint64_t dataset_size, uint64_t k, char* buf, size_t buf_size) {
  std::string s;
  ordlab_status st = guarded([&] { s = ordlab::total_domain_size(dataset_size, k).str(); });
  if (st != ORDLAB_OK) return st;
  return copy_out(s, buf, buf_size);
}

}  // extern "C"
