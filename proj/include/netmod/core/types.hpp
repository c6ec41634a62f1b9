#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netmod/traffic/descriptor.hpp"

namespace netmod {

enum class SchedPolicy { Fifo, StrictPriority, Wfq, Drr };

constexpr int kPolicyCount = 4;
constexpr int kMaxQueuesPerPort = 3;

const char* policy_name(SchedPolicy p);
SchedPolicy policy_from_name(const std::string& name);

// One queue at an output port. buffer_bits is the tail-drop budget; if
// packet_cap is set the queue additionally bounds the number of resident
// packets (used to realize exact M/M/1/b systems in validation setups).
struct QueueSpec {
  std::string id;
  double buffer_bits = 0.0;
  int priority = 0;  // 0 = served first under strict priority
  double weight = 0.0;  // WFQ/DRR share; 0 otherwise
  std::optional<int> packet_cap;
};

struct PortSpec {
  SchedPolicy policy = SchedPolicy::Fifo;
  std::vector<QueueSpec> queues;  // ordered by priority
};

// Unidirectional link; a bidirectional physical link is two entries.
struct LinkSpec {
  std::string id;
  std::string src;
  std::string dst;
  double capacity = 0.0;  // bits per time unit
  PortSpec port;
};

struct TopologySpec {
  std::vector<std::string> nodes;
  std::vector<LinkSpec> links;
};

// Per-flow performance triple; serves both as simulator label and as
// model/baseline prediction.
struct FlowMetrics {
  double mean_delay = 0.0;  // time units
  double jitter = 0.0;      // delay variance / mean delay
  double loss_ratio = 0.0;  // dropped / sent, in [0,1]
};

struct FlowSpec {
  std::string id;
  // (queue id, link id) per hop, in path order
  std::vector<std::pair<std::string, std::string>> path;
  traffic::Descriptor traffic;
  double lambda = 0.0;           // mean offered bit rate
  double avg_packet_size = 0.0;  // bits
  int tos_class = 0;
};

}  // namespace netmod
