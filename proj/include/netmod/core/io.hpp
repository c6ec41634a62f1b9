#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netmod/core/sample.hpp"

namespace netmod {

// Per-queue statistics exported by the simulator alongside flow labels.
struct QueueStatsRecord {
  double mean_occupancy_bits = 0.0;
  double loss_fraction = 0.0;
  double mean_packet_size = 0.0;
};

// One line of a dataset file. Labels and predictions are keyed by flow id;
// predictions additionally by predictor name ("qt", "gnn", ...).
struct SampleRecord {
  std::string sample_id;
  double traffic_intensity = 0.0;
  TopologySpec topology;
  std::vector<FlowSpec> flows;
  std::optional<std::map<std::string, FlowMetrics>> labels;
  std::map<std::string, std::map<std::string, FlowMetrics>> predictions;
  std::optional<std::map<std::string, QueueStatsRecord>> queue_stats;

  // materializes and validates; labels are attached in flow order
  NetworkSample build() const;

  static SampleRecord from_sample(const NetworkSample& s, std::string sample_id);
};

constexpr int kDatasetSchemaVersion = 1;

std::string write_record(const SampleRecord& rec);
SampleRecord parse_record(const std::string& line);

void write_dataset(const std::string& path, const std::vector<SampleRecord>& records);
std::vector<SampleRecord> read_dataset(const std::string& path);

}  // namespace netmod
