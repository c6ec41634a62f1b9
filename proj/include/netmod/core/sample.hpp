#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "netmod/core/types.hpp"

namespace netmod {

// A validated network sample: topology + routing + queuing + traffic, plus
// the inverse indices (flows per queue, flows per link, queues per link)
// that the simulator, the queuing baseline and the model all consume.
// Immutable after build(); safe for concurrent reads.
class NetworkSample {
 public:
  struct QueueRef {
    int link = -1;      // owning link index
    int position = 0;   // priority position within the port
    double buffer_bits = 0.0;
    double weight = 0.0;
    std::optional<int> packet_cap;
  };

  static NetworkSample build(TopologySpec topology, std::vector<FlowSpec> flows,
                             double traffic_intensity,
                             std::optional<std::vector<FlowMetrics>> labels = std::nullopt);

  // --- raw description ---
  const TopologySpec& topology() const { return topo_; }
  const std::vector<FlowSpec>& flows() const { return flows_; }
  double traffic_intensity() const { return ti_; }
  const std::optional<std::vector<FlowMetrics>>& labels() const { return labels_; }
  void set_labels(std::vector<FlowMetrics> labels);

  // --- sizes ---
  int num_nodes() const { return static_cast<int>(topo_.nodes.size()); }
  int num_links() const { return static_cast<int>(topo_.links.size()); }
  int num_queues() const { return static_cast<int>(queues_.size()); }
  int num_flows() const { return static_cast<int>(flows_.size()); }

  // --- id resolution (throws UnknownReference) ---
  int link_index(const std::string& id) const;
  int queue_index(const std::string& id) const;
  int flow_index(const std::string& id) const;

  // --- dense accessors ---
  const LinkSpec& link(int ix) const { return topo_.links[ix]; }
  const QueueRef& queue(int ix) const { return queues_[ix]; }
  const QueueSpec& queue_spec(int ix) const;
  const FlowSpec& flow(int ix) const { return flows_[ix]; }
  // (queue index, link index) per hop
  const std::vector<std::pair<int, int>>& flow_path(int flow_ix) const { return paths_[flow_ix]; }

  // flows traversing a queue, ascending flow index (stable by flow id order
  // of declaration; ids are unique)
  const std::vector<int>& flows_through_queue(int queue_ix) const { return q_flows_[queue_ix]; }
  std::vector<std::string> flows_through_queue(const std::string& queue_id) const;

  // flows traversing a link
  const std::vector<int>& flows_through_link(int link_ix) const { return l_flows_[link_ix]; }

  // queues of the link's output port, by priority position
  const std::vector<int>& queues_of_link(int link_ix) const { return l_queues_[link_ix]; }
  std::vector<std::string> queues_of_link(const std::string& link_id) const;

  // offered traffic over capacity, losses ignored
  double link_offered_load(int link_ix) const;
  double link_offered_load(const std::string& link_id) const;

 private:
  NetworkSample() = default;

  TopologySpec topo_;
  std::vector<FlowSpec> flows_;
  double ti_ = 0.0;
  std::optional<std::vector<FlowMetrics>> labels_;

  std::vector<QueueRef> queues_;
  std::unordered_map<std::string, int> node_ix_, link_ix_, queue_ix_, flow_ix_;
  std::vector<std::vector<std::pair<int, int>>> paths_;
  std::vector<std::vector<int>> q_flows_, l_flows_, l_queues_;
};

}  // namespace netmod
