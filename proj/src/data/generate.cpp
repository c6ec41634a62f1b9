#include "netmod/data/generate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>

#include <json.hpp>

#include "netmod/core/error.hpp"
#include "netmod/core/rng.hpp"

namespace netmod::datagen {

void GenerationSpec::validate() const {
  if (n_nodes_lo < 2 || n_nodes_hi < n_nodes_lo) fail(Errc::InfeasibleSpec, "bad node range");
  if (!(ti_lo > 0) || ti_hi < ti_lo) fail(Errc::InfeasibleSpec, "bad traffic intensity range");
  if (traffic_pool.empty() || policy_pool.empty() || buffer_pool.empty() ||
      capacity_tiers.empty())
    fail(Errc::InfeasibleSpec, "empty pool");
}

namespace {

std::string node_name(int i) { return "n" + std::to_string(i); }

struct EdgeSet {
  int n;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<char>> present;

  explicit EdgeSet(int n_) : n(n_), present(n_, std::vector<char>(n_, 0)) {}

  bool has(int u, int v) const { return present[u][v]; }
  void add(int u, int v) {
    if (!present[u][v]) {
      present[u][v] = 1;
      edges.emplace_back(u, v);
    }
  }
};

std::vector<int> reach_count(const EdgeSet& g, bool forward) {
  std::vector<std::vector<int>> adj(g.n);
  for (auto [u, v] : g.edges) forward ? adj[u].push_back(v) : adj[v].push_back(u);
  std::vector<int> order;
  std::vector<char> seen(g.n, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    order.push_back(u);
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        bfs.push(v);
      }
  }
  std::vector<int> unseen;
  for (int v = 0; v < g.n; ++v)
    if (!seen[v]) unseen.push_back(v);
  return unseen;
}

bool is_strongly_connected(const EdgeSet& g) {
  return reach_count(g, true).empty() && reach_count(g, false).empty();
}

// add reverse edges of existing links (falling back to fresh edges) until
// every node reaches every other
void make_strongly_connected(EdgeSet& g) {
  for (int guard = 0; guard < 4 * g.n + 8; ++guard) {
    auto fwd = reach_count(g, true);
    auto bwd = reach_count(g, false);
    if (fwd.empty() && bwd.empty()) return;
    if (!fwd.empty()) {
      int target = fwd.front();
      // an edge out of `target` whose reverse would pull it into reach
      bool added = false;
      for (auto [u, v] : g.edges)
        if (u == target && !g.has(v, u)) {
          g.add(v, u);
          added = true;
          break;
        }
      if (!added) g.add(0, target);
    } else {
      int source = bwd.front();
      bool added = false;
      for (auto [u, v] : g.edges)
        if (v == source && !g.has(v, u)) {
          g.add(v, u);
          added = true;
          break;
        }
      if (!added) g.add(source, 0);
    }
  }
  if (!is_strongly_connected(g)) fail(Errc::InfeasibleSpec, "connectivity post-process failed");
}

// expected flows per link under full-mesh lexicographic shortest-path
// routing; drives the capacity tier choice
std::vector<double> path_counts(const TopologySpec& topo) {
  std::vector<double> counts(topo.links.size(), 0.0);
  std::unordered_map<std::string, int> link_at;
  for (int li = 0; li < (int)topo.links.size(); ++li)
    link_at[topo.links[li].src + "|" + topo.links[li].dst] = li;
  int n = (int)topo.nodes.size();
  for (int s = 0; s < n; ++s)
    for (int d = 0; d < n; ++d) {
      if (s == d) continue;
      auto path = shortest_path(topo, s, d);
      for (size_t k = 0; k + 1 < path.size(); ++k)
        counts[link_at.at(topo.nodes[path[k]] + "|" + topo.nodes[path[k + 1]])] += 1.0;
    }
  return counts;
}

void assign_capacities(TopologySpec& topo, const GenerationSpec& spec, Rng& rng) {
  auto counts = path_counts(topo);
  // the top tier is sized for the most loaded link at the target
  // utilization under ti_hi; lighter links fall down the tier ladder
  double max_count = 1.0;
  for (double c : counts) max_count = std::max(max_count, c);
  double top = std::max(spec.capacity_tiers.back(), 1.0);
  double base = max_count * spec.ti_hi / (spec.target_utilization * top);
  std::vector<double> tiers;
  for (double t : spec.capacity_tiers) tiers.push_back(t * base);
  std::sort(tiers.begin(), tiers.end());
  for (int li = 0; li < (int)topo.links.size(); ++li) {
    double needed = std::max(counts[li], 1.0) * spec.ti_hi / spec.target_utilization;
    // smallest tier covering the expected load; occasional upward slack
    // keeps the draw stochastic without creating chronic bottlenecks
    int pick = (int)tiers.size() - 1;
    for (int k = 0; k < (int)tiers.size(); ++k)
      if (tiers[k] >= needed) {
        pick = k;
        break;
      }
    if (rng.uniform() < 0.15 && pick + 1 < (int)tiers.size()) ++pick;
    topo.links[li].capacity = tiers[pick];
  }
}

PortSpec default_port(const std::string& link_id) {
  PortSpec port;
  port.policy = SchedPolicy::Fifo;
  QueueSpec q;
  q.id = link_id + ":q0";
  q.buffer_bits = 32000.0;
  q.priority = 0;
  port.queues.push_back(q);
  return port;
}

}  // namespace

TopologySpec generate_topology(int n_nodes, double alpha, double beta, uint64_t seed,
                               const GenerationSpec& spec) {
  if (n_nodes < 2) fail(Errc::InfeasibleSpec, "need at least 2 nodes");
  Rng rng(seed);
  EdgeSet g(n_nodes);

  // power-law out-degree credits: beta * n * x^alpha with x uniform on
  // 1..n-1; small x values produce the hubs
  std::vector<int> credits(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    double x = 1.0 + (double)rng.uniform_index((uint64_t)std::max(1, n_nodes - 1));
    double c = beta * (double)n_nodes * std::pow(x, alpha);
    credits[i] = std::min((int)std::ceil(c), n_nodes - 1);
  }

  for (int guard = 0; guard < 100 * n_nodes * n_nodes; ++guard) {
    std::vector<int> holders;
    for (int i = 0; i < n_nodes; ++i)
      if (credits[i] > 0) holders.push_back(i);
    if (holders.empty()) break;
    int u = holders[rng.uniform_index(holders.size())];
    std::vector<int> targets;
    for (int v = 0; v < n_nodes; ++v)
      if (v != u && !g.has(u, v)) targets.push_back(v);
    if (targets.empty()) {
      credits[u] = 0;
      continue;
    }
    int v = targets[rng.uniform_index(targets.size())];
    g.add(u, v);
    --credits[u];
  }

  make_strongly_connected(g);

  TopologySpec topo;
  for (int i = 0; i < n_nodes; ++i) topo.nodes.push_back(node_name(i));
  // stable link order: sorted by (src, dst)
  std::sort(g.edges.begin(), g.edges.end());
  for (int k = 0; k < (int)g.edges.size(); ++k) {
    auto [u, v] = g.edges[k];
    LinkSpec l;
    l.id = "l" + std::to_string(k);
    l.src = node_name(u);
    l.dst = node_name(v);
    l.capacity = 1.0;  // assigned below
    l.port = default_port(l.id);
    topo.links.push_back(std::move(l));
  }
  assign_capacities(topo, spec, rng);
  return topo;
}

std::vector<int> shortest_path(const TopologySpec& topo, int src, int dst) {
  int n = (int)topo.nodes.size();
  std::vector<std::vector<int>> radj(n);  // reversed adjacency
  std::vector<std::vector<int>> adj(n);
  std::unordered_map<std::string, int> node_at;
  for (int i = 0; i < n; ++i) node_at[topo.nodes[i]] = i;
  for (const auto& l : topo.links) {
    int u = node_at.at(l.src), v = node_at.at(l.dst);
    adj[u].push_back(v);
    radj[v].push_back(u);
  }

  // hop distances to dst
  std::vector<int> dist(n, -1);
  std::queue<int> bfs;
  bfs.push(dst);
  dist[dst] = 0;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    for (int v : radj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        bfs.push(v);
      }
  }
  if (dist[src] < 0) return {};

  // walk greedily toward dst, breaking ties by node id
  std::vector<int> path{src};
  int cur = src;
  while (cur != dst) {
    int best = -1;
    for (int v : adj[cur]) {
      if (dist[v] != dist[cur] - 1) continue;
      if (best < 0 || topo.nodes[v] < topo.nodes[best]) best = v;
    }
    path.push_back(best);
    cur = best;
  }
  return path;
}

NetworkSample randomize_sample(const TopologySpec& base, const GenerationSpec& spec,
                               uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  TopologySpec topo = base;

  // per-port queuing configuration
  for (auto& l : topo.links) {
    SchedPolicy policy = spec.policy_pool[rng.uniform_index(spec.policy_pool.size())];
    int n_queues = policy == SchedPolicy::Fifo ? 1 : 2 + (int)rng.uniform_index(2);
    bool weighted = policy == SchedPolicy::Wfq || policy == SchedPolicy::Drr;
    l.port.policy = policy;
    l.port.queues.clear();
    for (int qi = 0; qi < n_queues; ++qi) {
      QueueSpec q;
      q.id = l.id + ":q" + std::to_string(qi);
      q.buffer_bits = spec.buffer_pool[rng.uniform_index(spec.buffer_pool.size())];
      q.priority = qi;
      q.weight = weighted ? rng.uniform(0.5, 2.0) : 0.0;
      l.port.queues.push_back(q);
    }
  }

  std::unordered_map<std::string, int> link_at;
  for (int li = 0; li < (int)topo.links.size(); ++li)
    link_at[topo.links[li].src + "|" + topo.links[li].dst] = li;

  double ti = rng.uniform(spec.ti_lo, spec.ti_hi);
  int n = (int)topo.nodes.size();

  // one flow per ordered pair over the lexicographic shortest path
  std::vector<FlowSpec> flows;
  std::vector<double> weights;
  for (int s = 0; s < n; ++s)
    for (int d = 0; d < n; ++d) {
      if (s == d) continue;
      auto path = shortest_path(topo, s, d);
      if (path.empty()) fail(Errc::InfeasibleSpec, "unreachable pair in a connected topology");

      FlowSpec f;
      f.id = "f_" + topo.nodes[s] + "_" + topo.nodes[d];
      f.tos_class = (int)rng.uniform_index(3);

      traffic::Descriptor t;
      t.model = spec.traffic_pool[rng.uniform_index(spec.traffic_pool.size())];
      switch (t.model) {
        case traffic::Model::OnOff:
          t.t_on = rng.uniform(2.0, 10.0);
          t.t_off = rng.uniform(2.0, 10.0);
          break;
        case traffic::Model::AutocorrelatedExp: t.rho_a = rng.uniform(0.5, 0.9); break;
        case traffic::Model::ModulatedExp:
          t.alpha = rng.uniform(1.0, 4.0);
          t.beta = rng.uniform(1.5, 3.0);
          break;
        default: break;
      }
      t.packet_size = traffic::PacketSizeDist::three_point({500, 1000, 1500}, {0.25, 0.5, 0.25});
      f.traffic = t;
      f.avg_packet_size = t.packet_size.mean;

      for (size_t k = 0; k + 1 < path.size(); ++k) {
        int li = link_at.at(topo.nodes[path[k]] + "|" + topo.nodes[path[k + 1]]);
        const auto& queues = topo.links[li].port.queues;
        int qi = std::min(f.tos_class, (int)queues.size() - 1);
        f.path.emplace_back(queues[qi].id, topo.links[li].id);
      }
      weights.push_back(rng.uniform(0.5, 1.5));
      flows.push_back(std::move(f));
    }

  // scale rates so the mean per-flow offered rate equals the drawn TI
  double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (size_t i = 0; i < flows.size(); ++i) {
    double lambda = weights[i] * ti * (double)flows.size() / wsum;
    flows[i].lambda = lambda;
    flows[i].traffic.lambda = lambda;
  }

  return NetworkSample::build(std::move(topo), std::move(flows), ti);
}

std::vector<std::vector<int>> split_indices(int n, const std::vector<double>& fractions,
                                            uint64_t seed) {
  double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (fractions.empty() || std::abs(total - 1.0) > 1e-9)
    fail(Errc::BadFractions, "fractions must sum to 1");
  for (double f : fractions)
    if (f < 0) fail(Errc::BadFractions, "fractions must be nonnegative");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index((uint64_t)i + 1)]);

  std::vector<std::vector<int>> parts(fractions.size());
  double acc = 0.0;
  int from = 0;
  for (size_t k = 0; k < fractions.size(); ++k) {
    acc += fractions[k];
    int to = k + 1 == fractions.size() ? n : (int)std::lround(acc * n);
    for (int i = from; i < to; ++i) parts[k].push_back(order[i]);
    from = to;
  }
  return parts;
}

TopologySpec load_topology_file(const std::string& path, const GenerationSpec& spec,
                                uint64_t seed) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingArtifact, "cannot open topology file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("bad topology file: ") + e.what());
  }
  int n = j.at("nodes").get<int>();
  TopologySpec topo;
  for (int i = 0; i < n; ++i) topo.nodes.push_back(node_name(i));
  int k = 0;
  auto add = [&](int u, int v) {
    LinkSpec l;
    l.id = "l" + std::to_string(k++);
    l.src = node_name(u);
    l.dst = node_name(v);
    l.capacity = 1.0;
    l.port = default_port(l.id);
    topo.links.push_back(std::move(l));
  };
  for (const auto& e : j.at("edges")) {
    int u = e.at(0).get<int>(), v = e.at(1).get<int>();
    if (u == v || u < 0 || v < 0 || u >= n || v >= n)
      fail(Errc::ParseError, "bad edge in topology file");
    add(u, v);
    add(v, u);  // files list undirected pairs
  }
  Rng rng(seed);
  assign_capacities(topo, spec, rng);
  return topo;
}

}  // namespace netmod::datagen
