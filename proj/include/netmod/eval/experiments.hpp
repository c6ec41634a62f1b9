#pragma once

#include <string>
#include <vector>

#include "netmod/eval/pipeline.hpp"

namespace netmod::eval {

// One experiment run: generates datasets, simulates ground truth, trains
// models where needed, and writes report.json plus table.csv into out_dir.
// Every row is reproducible from the recorded config and seed.
struct ExperimentConfig {
  std::string kind;  // traffic-table | scheduling-table | scale-sweep | fewshot-sweep | ablation
  std::string out_dir = ".";
  uint64_t seed = 1;
  int workers = 1;

  // pipeline scale (defaults are desk scale; paper scale is reachable by
  // raising them)
  int n_train = 200;
  int n_test = 50;
  int epochs = 50;
  int samples_per_epoch = 200;
  double sim_duration = 8000.0;
  double sim_warmup = 800.0;

  datagen::GenerationSpec gen;           // base generation spec
  model::ModelConfig model;              // hidden_dim / iterations / norms
  std::vector<model::Target> targets{model::Target::Delay};

  // traffic-table: which single-model pools to run; empty = all five + mixed
  std::vector<std::string> traffic_rows;
  // scale-sweep / ablation
  std::vector<int> scale_bins{20, 35, 50};
  int scale_eval_per_bin = 5;
  // fewshot-sweep
  std::vector<int> fewshot_sizes{25, 50, 100, 200};
  // scheduling-table traffic-intensity bands
  std::vector<std::pair<double, double>> ti_bands{{400, 800}, {800, 1400}, {1400, 2000}};
};

void run_experiment(const ExperimentConfig& config);

}  // namespace netmod::eval
