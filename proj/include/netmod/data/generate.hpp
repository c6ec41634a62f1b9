#pragma once

#include <string>
#include <vector>

#include "netmod/core/sample.hpp"

namespace netmod::datagen {

// Knobs for synthetic sample generation. Capacity constants are our own
// calibration: tiers {1,2,4} x base(n) with the tier picked from the
// expected shortest-path flow count of each link.
struct GenerationSpec {
  int n_nodes_lo = 5, n_nodes_hi = 8;
  double alpha_lo = -2.2, alpha_hi = -1.8;  // out-degree credit exponent
  double beta_lo = 1.2, beta_hi = 2.0;      // edge count factor
  double ti_lo = 400.0, ti_hi = 2000.0;     // traffic intensity range

  std::vector<traffic::Model> traffic_pool{
      traffic::Model::Poisson, traffic::Model::ConstantBitrate, traffic::Model::OnOff,
      traffic::Model::AutocorrelatedExp, traffic::Model::ModulatedExp};
  std::vector<SchedPolicy> policy_pool{SchedPolicy::Fifo, SchedPolicy::StrictPriority,
                                       SchedPolicy::Wfq, SchedPolicy::Drr};
  std::vector<double> buffer_pool{8000.0, 16000.0, 32000.0, 64000.0};

  std::vector<double> capacity_tiers{1.0, 2.0, 4.0};
  double target_utilization = 0.95;  // per-link utilization aimed at ti_hi

  void validate() const;
};

// Power-law out-degree graph, post-processed to strong connectivity and
// annotated with capacities; ports start as single FIFO queues and are
// re-drawn by randomize_sample.
TopologySpec generate_topology(int n_nodes, double alpha, double beta, uint64_t seed,
                               const GenerationSpec& spec = {});

// Lexicographically smallest shortest path src -> dst as a node index
// sequence; empty when unreachable.
std::vector<int> shortest_path(const TopologySpec& topo, int src, int dst);

// Full-mesh flows over shortest paths with randomized traffic, queuing and
// rates scaled so the mean per-flow rate equals the drawn traffic intensity.
NetworkSample randomize_sample(const TopologySpec& topo, const GenerationSpec& spec,
                               uint64_t seed);

// Deterministic disjoint partition of 0..n-1 covering every index.
std::vector<std::vector<int>> split_indices(int n, const std::vector<double>& fractions,
                                            uint64_t seed);

// Bundled well-known topology files ({name, nodes, edges} JSON); capacities
// are assigned with the same rule as synthetic graphs.
TopologySpec load_topology_file(const std::string& path, const GenerationSpec& spec,
                                uint64_t seed);

}  // namespace netmod::datagen
