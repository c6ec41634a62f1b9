#pragma once

#include <functional>
#include <vector>

#include "netmod/data/generate.hpp"
#include "netmod/eval/metrics.hpp"
#include "netmod/model/train.hpp"
#include "netmod/sim/simulator.hpp"

namespace netmod::eval {

// chunked thread fan-out; results are index-addressed so scheduling cannot
// change them
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Generate `count` samples from the spec; sample k uses seeds derived from
// (seed, k) for both topology and configuration.
std::vector<NetworkSample> generate_samples(const datagen::GenerationSpec& spec, int count,
                                            uint64_t seed);

// Label samples in place with simulator ground truth.
void simulate_labels(std::vector<NetworkSample>& samples, const sim::SimOptions& opts,
                     int workers);

// Per-flow vectors of one metric across a sample set.
std::vector<double> flatten_metric(const std::vector<std::vector<FlowMetrics>>& per_sample,
                                   model::Target target);

// Predictions for a whole set.
std::vector<std::vector<FlowMetrics>> qt_predictions(const std::vector<NetworkSample>& samples,
                                                     int workers);
std::vector<std::vector<FlowMetrics>> model_predictions(const diff::ParamStore& params,
                                                        const model::ModelConfig& config,
                                                        const std::vector<NetworkSample>& samples,
                                                        int workers);

// Metric report of predictions against the samples' labels.
MetricReport score(const std::vector<NetworkSample>& samples,
                   const std::vector<std::vector<FlowMetrics>>& predictions,
                   model::Target target);

}  // namespace netmod::eval
