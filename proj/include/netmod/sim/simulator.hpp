#pragma once

#include <cstdint>
#include <vector>

#include "netmod/core/sample.hpp"

namespace netmod::sim {

struct SimOptions {
  double duration = 10000.0;  // simulated time units
  double warmup = 1000.0;     // excluded from every statistic
  uint64_t seed = 1;
};

struct QueueStats {
  double mean_occupancy_bits = 0.0;
  double loss_fraction = 0.0;   // drops / enqueue attempts
  double mean_packet_size = 0.0;
  uint64_t enqueued = 0;
  uint64_t dropped = 0;
};

struct SimulationResult {
  std::vector<FlowMetrics> flow_metrics;  // by flow index
  std::vector<QueueStats> queue_stats;    // by global queue index
  // per-flow packet accounting over the measured window
  std::vector<uint64_t> sent, delivered, dropped;
  uint64_t event_count = 0;
  double duration = 0.0;
  double warmup = 0.0;
};

// Packet-level discrete-event simulation of the sample. Deterministic for a
// fixed (sample, options) pair; single-threaded by construction.
SimulationResult simulate(const NetworkSample& sample, const SimOptions& opts);

}  // namespace netmod::sim
