/*
 * ordlab — a desk-scale training laboratory for data-ordering and
 * sum-augmentation experiments.
 *
 * C API over the C++ core: opaque handles, status codes, thread-local error
 * text. Status values double as the CLI exit codes.
 */
#ifndef ORDLAB_H
#define ORDLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ordlab_config ordlab_config;

typedef enum ordlab_status {
  ORDLAB_OK = 0,
  ORDLAB_ERR_CONFIG = 1,  /* bad configuration file, key, or value */
  ORDLAB_ERR_RUNTIME = 2, /* anything that failed while running */
  ORDLAB_ERR_BUDGET = 3,  /* refused: computed work exceeds the budget */
  ORDLAB_ERR_INVALID = 4  /* null handle or bad argument at the C boundary */
} ordlab_status;

const char* ordlab_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* ordlab_last_error(void);

/* Configuration handles. Load validates keys, types, and enum values. */
ordlab_status ordlab_config_create(ordlab_config** out);
ordlab_status ordlab_config_load(const char* path, ordlab_config** out);
ordlab_status ordlab_config_set(ordlab_config* cfg, const char* key, const char* value);
ordlab_status ordlab_config_get(const ordlab_config* cfg, const char* key, char* buf, size_t buf_size);
void ordlab_config_free(ordlab_config* cfg);

/*
 * Run one subcommand: train | explore | poa | cascade | gradual | tta |
 * attack-eval | plot. Artifacts land under run.output_dir.
 */
ordlab_status ordlab_run(ordlab_config* cfg, const char* subcommand);

/* Gradually-cascading coefficients for n sum groups at progress t in [0,1];
 * coeffs must hold n doubles. */
ordlab_status ordlab_gcc(uint32_t n, double t, double* coeffs);

/* Exact combinatorics, returned as decimal strings. */
ordlab_status ordlab_count_orderings(uint64_t samples, uint64_t batch_size, char* buf, size_t buf_size);
ordlab_status ordlab_total_iterations(uint64_t perms_per_epoch, uint64_t clusters, uint64_t epochs,
                                      char* buf, size_t buf_size);
ordlab_status ordlab_domain_size(uint64_t dataset_size, uint64_t k, char* buf, size_t buf_size);
ordlab_status ordlab_total_domain_size(uint64_t dataset_size, uint64_t k, char* buf, size_t buf_size);

#ifdef __cplusplus
}
#endif

#endif /* ORDLAB_H */
