#pragma once

#include <vector>

#include "netmod/model/model.hpp"

namespace netmod::model {

struct TrainOptions {
  ModelConfig config;
  Target target = Target::Delay;
  int epochs = 50;
  int samples_per_epoch = 200;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;
  uint64_t seed = 1;
  bool verbose = false;  // one progress line per epoch on stderr
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  diff::ParamStore params;  // best-validation parameters
  ModelConfig config;
  std::vector<EpochStats> history;
  double best_val_loss = 0.0;
  int best_epoch = -1;
  bool diverged = false;  // aborted on a non-finite loss; params hold the last good state
};

// One gradient step per sample (a sample already batches all its flows).
// Deterministic for a fixed (dataset, options) pair.
TrainResult train(const std::vector<NetworkSample>& dataset, const TrainOptions& opts);

}  // namespace netmod::model
