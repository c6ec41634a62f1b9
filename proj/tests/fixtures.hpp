#pragma once

// Shared sample builders and independent oracles for the test suites. The
// oracles are deliberately simple and separate from the implementation
// paths they check.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "netmod/core/error.hpp"
#include "netmod/core/sample.hpp"

namespace fixtures {

using namespace netmod;

inline QueueSpec q(std::string id, double buffer, int prio, double weight = 0.0) {
  QueueSpec s;
  s.id = std::move(id);
  s.buffer_bits = buffer;
  s.priority = prio;
  s.weight = weight;
  return s;
}

inline LinkSpec link(std::string id, std::string src, std::string dst, double cap,
                     SchedPolicy policy = SchedPolicy::Fifo, int n_queues = 1,
                     double buffer = 64000.0) {
  LinkSpec l;
  l.id = id;
  l.src = std::move(src);
  l.dst = std::move(dst);
  l.capacity = cap;
  l.port.policy = policy;
  bool weighted = policy == SchedPolicy::Wfq || policy == SchedPolicy::Drr;
  for (int i = 0; i < n_queues; ++i)
    l.port.queues.push_back(q(id + ":q" + std::to_string(i), buffer, i, weighted ? 1.0 : 0.0));
  return l;
}

// chain a -> b -> c -> ... with reverse links so the graph stays strongly
// connected; forward link i is named "l<i>"
inline TopologySpec chain(int n_nodes, double cap = 1000.0,
                          SchedPolicy policy = SchedPolicy::Fifo, double buffer = 64000.0) {
  TopologySpec t;
  for (int i = 0; i < n_nodes; ++i) t.nodes.push_back("n" + std::to_string(i));
  for (int i = 0; i + 1 < n_nodes; ++i) {
    t.links.push_back(link("l" + std::to_string(i), t.nodes[i], t.nodes[i + 1], cap, policy, 1,
                           buffer));
    t.links.push_back(link("r" + std::to_string(i), t.nodes[i + 1], t.nodes[i], cap,
                           SchedPolicy::Fifo, 1, buffer));
  }
  return t;
}

inline FlowSpec flow(std::string id, std::vector<std::pair<std::string, std::string>> path,
                     traffic::Descriptor traffic, int tos = 0) {
  FlowSpec f;
  f.id = std::move(id);
  f.path = std::move(path);
  f.traffic = traffic;
  f.lambda = traffic.lambda;
  f.avg_packet_size = traffic.packet_size.mean;
  f.tos_class = tos;
  return f;
}

inline traffic::Descriptor poisson(double lambda, double pkt_mean = 1000.0) {
  traffic::Descriptor d;
  d.model = traffic::Model::Poisson;
  d.lambda = lambda;
  d.packet_size = traffic::PacketSizeDist::constant(pkt_mean);
  return d;
}

inline traffic::Descriptor cbr(double lambda, double pkt_mean = 1000.0) {
  traffic::Descriptor d;
  d.model = traffic::Model::ConstantBitrate;
  d.lambda = lambda;
  d.packet_size = traffic::PacketSizeDist::constant(pkt_mean);
  return d;
}

// single queue under Poisson arrivals and exponential service, realized as
// a 2-node sample (idle reverse link keeps strong connectivity); packet_cap
// makes it an exact M/M/1/b system
inline NetworkSample mm1_sample(double rho, int b_packets, double mu_pkts = 1.0,
                                double pkt_mean = 1000.0) {
  TopologySpec t;
  t.nodes = {"a", "b"};
  double cap = mu_pkts * pkt_mean;
  LinkSpec fwd = link("l0", "a", "b", cap);
  fwd.port.queues[0].buffer_bits = 1e15;  // the packet cap is the binding limit
  fwd.port.queues[0].packet_cap = b_packets;
  t.links = {fwd, link("r0", "b", "a", cap)};
  traffic::Descriptor d;
  d.model = traffic::Model::Poisson;
  d.lambda = rho * cap;
  d.packet_size = traffic::PacketSizeDist::exponential(pkt_mean);
  return NetworkSample::build(t, {flow("f0", {{"l0:q0", "l0"}}, d)}, d.lambda);
}

// the 4-node / 3-forward-link / 2-flow sample topology: flow1 over l1,l3 and
// flow2 over l2,l3
inline NetworkSample shared_tail_sample(double lam1 = 300.0, double lam2 = 300.0,
                                        double cap1 = 1000.0, double cap3 = 1000.0) {
  TopologySpec t;
  t.nodes = {"a", "b", "c", "d"};
  t.links = {link("l1", "a", "c", cap1),   link("l2", "b", "c", 1000.0),
             link("l3", "c", "d", cap3),   link("l1r", "c", "a", 1000.0),
             link("l2r", "c", "b", 1000.0), link("l3r", "d", "c", 1000.0)};
  std::vector<FlowSpec> flows = {
      flow("flow1", {{"l1:q0", "l1"}, {"l3:q0", "l3"}}, poisson(lam1)),
      flow("flow2", {{"l2:q0", "l2"}, {"l3:q0", "l3"}}, poisson(lam2)),
  };
  return NetworkSample::build(t, flows, lam1 + lam2);
}

// --- independent oracles ---

// two-sample Kolmogorov-Smirnov p-value (asymptotic)
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    double fa = (double)i / a.size(), fb = (double)j / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  double ne = (double)a.size() * b.size() / (a.size() + b.size());
  double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace fixtures
