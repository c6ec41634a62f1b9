#include "netmod/core/sample.hpp"

#include <algorithm>
#include <queue>

#include "netmod/core/error.hpp"

namespace netmod {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::PathDisconnected: return "PathDisconnected";
    case Errc::QueuePortMismatch: return "QueuePortMismatch";
    case Errc::UnknownReference: return "UnknownReference";
    case Errc::InvalidTopology: return "InvalidTopology";
    case Errc::ZeroTraffic: return "ZeroTraffic";
    case Errc::NumericOverflow: return "NumericOverflow";
    case Errc::AllQueuesEmpty: return "AllQueuesEmpty";
    case Errc::InvalidRate: return "InvalidRate";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NotScalarLoss: return "NotScalarLoss";
    case Errc::ZeroLabel: return "ZeroLabel";
    case Errc::UnlabeledSample: return "UnlabeledSample";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::InfeasibleSpec: return "InfeasibleSpec";
    case Errc::BadFractions: return "BadFractions";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ZeroTruth: return "ZeroTruth";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::ParseError: return "ParseError";
  }
  return "Error";
}

const char* policy_name(SchedPolicy p) {
  switch (p) {
    case SchedPolicy::Fifo: return "FIFO";
    case SchedPolicy::StrictPriority: return "SP";
    case SchedPolicy::Wfq: return "WFQ";
    case SchedPolicy::Drr: return "DRR";
  }
  return "?";
}

SchedPolicy policy_from_name(const std::string& name) {
  if (name == "FIFO") return SchedPolicy::Fifo;
  if (name == "SP") return SchedPolicy::StrictPriority;
  if (name == "WFQ") return SchedPolicy::Wfq;
  if (name == "DRR") return SchedPolicy::Drr;
  fail(Errc::ParseError, "unknown scheduling policy '" + name + "'");
}

namespace {

// strong connectivity: every node reachable from node 0 in both the graph
// and its transpose
bool strongly_connected(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n <= 1) return true;
  auto reach = [&](bool forward) {
    std::vector<std::vector<int>> adj(n);
    for (auto [u, v] : edges) forward ? adj[u].push_back(v) : adj[v].push_back(u);
    std::vector<char> seen(n, 0);
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = 1;
    int count = 1;
    while (!bfs.empty()) {
      int u = bfs.front();
      bfs.pop();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          bfs.push(v);
        }
    }
    return count == n;
  };
  return reach(true) && reach(false);
}

}  // namespace

NetworkSample NetworkSample::build(TopologySpec topology, std::vector<FlowSpec> flows,
                                   double traffic_intensity,
                                   std::optional<std::vector<FlowMetrics>> labels) {
  NetworkSample s;
  s.topo_ = std::move(topology);
  s.flows_ = std::move(flows);
  s.ti_ = traffic_intensity;

  // nodes
  for (int i = 0; i < (int)s.topo_.nodes.size(); ++i) {
    if (!s.node_ix_.emplace(s.topo_.nodes[i], i).second)
      fail(Errc::InvalidTopology, "duplicate node id '" + s.topo_.nodes[i] + "'");
  }

  // links, ports, queues
  std::vector<std::pair<int, int>> edges;
  std::unordered_map<int64_t, int> edge_seen;
  for (int li = 0; li < (int)s.topo_.links.size(); ++li) {
    LinkSpec& l = s.topo_.links[li];
    if (!s.link_ix_.emplace(l.id, li).second)
      fail(Errc::InvalidTopology, "duplicate link id '" + l.id + "'");
    auto su = s.node_ix_.find(l.src);
    auto sv = s.node_ix_.find(l.dst);
    if (su == s.node_ix_.end() || sv == s.node_ix_.end())
      fail(Errc::UnknownReference, "link '" + l.id + "' references unknown node");
    if (su->second == sv->second)
      fail(Errc::InvalidTopology, "self-loop link '" + l.id + "'");
    int64_t key = (int64_t)su->second * (int64_t)(s.topo_.nodes.size() + 1) + sv->second;
    if (!edge_seen.emplace(key, li).second)
      fail(Errc::InvalidTopology, "duplicate link for node pair " + l.src + "->" + l.dst);
    edges.emplace_back(su->second, sv->second);
    if (!(l.capacity > 0)) fail(Errc::InvalidTopology, "link '" + l.id + "' capacity must be > 0");

    PortSpec& port = l.port;
    if (port.queues.empty() || (int)port.queues.size() > kMaxQueuesPerPort)
      fail(Errc::InvalidTopology, "link '" + l.id + "' must have 1..3 queues");
    if (port.policy == SchedPolicy::Fifo && port.queues.size() != 1)
      fail(Errc::InvalidTopology, "FIFO port of link '" + l.id + "' must have exactly one queue");
    bool weighted = port.policy == SchedPolicy::Wfq || port.policy == SchedPolicy::Drr;
    double wsum = 0.0;
    for (int qi = 0; qi < (int)port.queues.size(); ++qi) {
      QueueSpec& q = port.queues[qi];
      if (!(q.buffer_bits > 0))
        fail(Errc::InvalidTopology, "queue '" + q.id + "' buffer must be > 0");
      if (q.priority != qi)
        fail(Errc::InvalidTopology, "queue '" + q.id + "' priority must equal its port position");
      if (weighted) {
        if (!(q.weight > 0))
          fail(Errc::InvalidTopology, "queue '" + q.id + "' needs a positive weight under " +
                                          std::string(policy_name(port.policy)));
        wsum += q.weight;
      } else if (q.weight != 0.0) {
        fail(Errc::InvalidTopology,
             "queue '" + q.id + "' carries a weight but the port policy is not WFQ/DRR");
      }
      if (!s.queue_ix_.emplace(q.id, (int)s.queues_.size()).second)
        fail(Errc::InvalidTopology, "duplicate queue id '" + q.id + "'");
      s.queues_.push_back(QueueRef{li, qi, q.buffer_bits, q.weight, q.packet_cap});
    }
    if (weighted) {
      // normalize weights to sum to 1
      for (int qi = 0; qi < (int)port.queues.size(); ++qi) {
        port.queues[qi].weight /= wsum;
        s.queues_[s.queue_ix_.at(port.queues[qi].id)].weight = port.queues[qi].weight;
      }
    }
  }

  if (!strongly_connected((int)s.topo_.nodes.size(), edges))
    fail(Errc::InvalidTopology, "topology is not strongly connected");

  // flows and inverse indices
  s.paths_.resize(s.flows_.size());
  s.q_flows_.assign(s.queues_.size(), {});
  s.l_flows_.assign(s.topo_.links.size(), {});
  s.l_queues_.assign(s.topo_.links.size(), {});
  for (int li = 0; li < (int)s.topo_.links.size(); ++li)
    for (const QueueSpec& q : s.topo_.links[li].port.queues)
      s.l_queues_[li].push_back(s.queue_ix_.at(q.id));

  for (int fi = 0; fi < (int)s.flows_.size(); ++fi) {
    const FlowSpec& f = s.flows_[fi];
    if (!s.flow_ix_.emplace(f.id, fi).second)
      fail(Errc::InvalidTopology, "duplicate flow id '" + f.id + "'");
    if (f.path.empty()) fail(Errc::PathDisconnected, "flow '" + f.id + "' has an empty path");
    if (!(f.lambda > 0)) fail(Errc::InvalidTopology, "flow '" + f.id + "' lambda must be > 0");
    if (!(f.avg_packet_size > 0))
      fail(Errc::InvalidTopology, "flow '" + f.id + "' packet size must be > 0");
    f.traffic.validate();

    auto& path = s.paths_[fi];
    int prev_dst = -1;
    for (const auto& [queue_id, link_id] : f.path) {
      auto lit = s.link_ix_.find(link_id);
      if (lit == s.link_ix_.end())
        fail(Errc::UnknownReference, "flow '" + f.id + "' references unknown link '" + link_id + "'");
      auto qit = s.queue_ix_.find(queue_id);
      if (qit == s.queue_ix_.end())
        fail(Errc::UnknownReference,
             "flow '" + f.id + "' references unknown queue '" + queue_id + "'");
      int li = lit->second, qi = qit->second;
      if (s.queues_[qi].link != li)
        fail(Errc::QueuePortMismatch, "flow '" + f.id + "': queue '" + queue_id +
                                          "' does not feed link '" + link_id + "'");
      const LinkSpec& l = s.topo_.links[li];
      int src = s.node_ix_.at(l.src), dst = s.node_ix_.at(l.dst);
      if (prev_dst >= 0 && src != prev_dst)
        fail(Errc::PathDisconnected,
             "flow '" + f.id + "': link '" + link_id + "' does not continue the walk");
      prev_dst = dst;
      path.emplace_back(qi, li);
      s.q_flows_[qi].push_back(fi);
      s.l_flows_[li].push_back(fi);
    }
  }
  // a flow revisiting a queue/link would be recorded twice; dedupe keeps the
  // index a set while preserving ascending order
  auto dedupe = [](std::vector<std::vector<int>>& index) {
    for (auto& v : index) v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(s.q_flows_);
  dedupe(s.l_flows_);

  if (labels) {
    if (labels->size() != s.flows_.size())
      fail(Errc::InvalidTopology, "labels must cover every flow");
    s.labels_ = std::move(labels);
  }
  return s;
}

void NetworkSample::set_labels(std::vector<FlowMetrics> labels) {
  if (labels.size() != flows_.size()) fail(Errc::InvalidTopology, "labels must cover every flow");
  labels_ = std::move(labels);
}

int NetworkSample::link_index(const std::string& id) const {
  auto it = link_ix_.find(id);
  if (it == link_ix_.end()) fail(Errc::UnknownReference, "unknown link '" + id + "'");
  return it->second;
}

int NetworkSample::queue_index(const std::string& id) const {
  auto it = queue_ix_.find(id);
  if (it == queue_ix_.end()) fail(Errc::UnknownReference, "unknown queue '" + id + "'");
  return it->second;
}

int NetworkSample::flow_index(const std::string& id) const {
  auto it = flow_ix_.find(id);
  if (it == flow_ix_.end()) fail(Errc::UnknownReference, "unknown flow '" + id + "'");
  return it->second;
}

const QueueSpec& NetworkSample::queue_spec(int ix) const {
  const QueueRef& r = queues_[ix];
  return topo_.links[r.link].port.queues[r.position];
}

std::vector<std::string> NetworkSample::flows_through_queue(const std::string& queue_id) const {
  std::vector<std::string> out;
  for (int fi : q_flows_[queue_index(queue_id)]) out.push_back(flows_[fi].id);
  return out;
}

std::vector<std::string> NetworkSample::queues_of_link(const std::string& link_id) const {
  std::vector<std::string> out;
  for (int qi : l_queues_[link_index(link_id)]) out.push_back(queue_spec(qi).id);
  return out;
}

double NetworkSample::link_offered_load(int link_ix) const {
  double offered = 0.0;
  for (int fi : l_flows_[link_ix]) offered += flows_[fi].lambda;
  return offered / topo_.links[link_ix].capacity;
}

double NetworkSample::link_offered_load(const std::string& link_id) const {
  return link_offered_load(link_index(link_id));
}

}  // namespace netmod
