#pragma once

#include <string>

#include "ordlab/config.hpp"
#include "ordlab/data.hpp"
#include "ordlab/nn.hpp"
#include "ordlab/train.hpp"

namespace ordlab {

struct DataBundle {
  Dataset train;
  Dataset test;
};

DataBundle load_data(const ExperimentConfig& cfg);
ModelSpec model_spec_from_config(const ExperimentConfig& cfg, const Dataset& train_ds);
TrainSettings train_settings_from_config(const ExperimentConfig& cfg);
PreprocessConfig preprocess_from_config(const ExperimentConfig& cfg);
int resolve_workers(const ExperimentConfig& cfg);

// Dispatches train | explore | poa | cascade | gradual | tta | attack-eval |
// plot; writes metrics/event/checkpoint artifacts under run.output_dir.
// Throws ordlab::Error on failure.
void run_subcommand(const std::string& subcommand, const ExperimentConfig& cfg);

}  // namespace ordlab
