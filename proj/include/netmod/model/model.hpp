#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "netmod/core/sample.hpp"
#include "netmod/diff/nn.hpp"
#include "netmod/traffic/generator.hpp"

namespace netmod::model {

// Hyperparameters plus the frozen feature normalizers. The normalizers ride
// along in every checkpoint manifest so inference on larger networks reuses
// training-time scaling.
struct ModelConfig {
  int hidden_dim = 32;
  int iterations = 8;
  bool ablate_load = false;       // feed normalized capacity instead of load
  bool ablate_occupancy = false;  // read delay directly off h_f, no per-hop terms
  traffic::FeatureNorms norms;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::ordered_json& j);
};

constexpr int kLinkFeatureDim = 1 + kPolicyCount;     // load|capacity + policy one-hot
constexpr int kQueueFeatureDim = 1 + kMaxQueuesPerPort + 1;  // buffer + priority one-hot + weight

// All learnable weights: three embedding nets, two path/link recurrent
// cells, the queue update cell and three readout heads.
diff::ParamStore init_parameters(const ModelConfig& config, uint64_t seed);

// Static execution plan for one sample: gather index lists for the
// position-batched message passing, plus per-hop readout constants. Hop
// rows are position-major: all first hops, then all second hops, and so
// on, each block in ascending flow order.
struct MpPlan {
  int n_flows = 0, n_queues = 0, n_links = 0, total_hops = 0;

  struct FlowPos {
    std::vector<int64_t> flows;          // ascending flow indices at this position
    std::vector<int64_t> queues, links;  // hop entities, one per flow above
    // row of each flow inside the previous position (positions > 0); flows
    // still on their path at m are a subsequence of those at m-1
    std::vector<int64_t> carried;
    std::vector<int64_t> ending;  // local rows whose path ends here
  };
  std::vector<FlowPos> flow_pos;

  // maps each flow to its row in the concatenation of per-position ending
  // blocks, inverting the path-end permutation
  std::vector<int64_t> ending_row_of_flow;

  struct LinkPos {
    std::vector<int64_t> links, queues;
  };
  std::vector<LinkPos> link_pos;  // entry j covers ports with > j queues

  std::vector<int64_t> hop_queue;  // per hop row: queue index
  std::vector<int64_t> hop_flow;   // per hop row: flow index
  std::vector<double> hop_inv_cap;
  std::vector<double> hop_trans;        // transmission delay of the hop
  std::vector<double> hop_port_buffer;  // total buffer bits at the hop's port

  static MpPlan build(const NetworkSample& sample);
};

struct HiddenVars {
  diff::Var h_f, h_q, h_l;
  diff::Var h_fl;  // per-(flow,hop) states of the latest iteration
  diff::Var x_f, x_q, x_l;  // input feature leaves (gradient probes hang off these)
};

HiddenVars init_states(diff::Tape& tp, const diff::BoundParams& p, const NetworkSample& sample,
                       const MpPlan& plan, const ModelConfig& config);

// T iterations of the flow -> queue -> link stages; T = 0 returns the input
// states untouched (h_fl stays zero).
HiddenVars message_passing(diff::Tape& tp, const diff::BoundParams& p, const MpPlan& plan,
                           HiddenVars states, int iterations);

struct ReadoutVars {
  diff::Var delay, jitter, loss;  // each [n_flows, 1]
  diff::Var occupancy;            // per-hop effective occupancy bits; invalid when ablated
};

ReadoutVars readout(diff::Tape& tp, const diff::BoundParams& p, const MpPlan& plan,
                    const HiddenVars& states, const ModelConfig& config);

enum class Target { Delay, Jitter, Loss };
const char* target_name(Target t);
Target target_from_name(const std::string& name);

// On-tape training loss: MAPE over delays, MSE over jitters, MAE over loss
// ratios, averaged over flows.
diff::Var prediction_loss(diff::Tape& tp, const ReadoutVars& out,
                          const std::vector<FlowMetrics>& labels, Target target);

// Plain evaluation counterpart over prediction/label sets.
double loss_fn(const std::vector<FlowMetrics>& pred, const std::vector<FlowMetrics>& labels,
               Target target);

struct PredictResult {
  std::vector<FlowMetrics> metrics;
  // hops whose predicted effective occupancy exceeds the total port buffer;
  // reported, never clamped
  int occupancy_flags = 0;
};

PredictResult predict(const diff::ParamStore& params, const ModelConfig& config,
                      const NetworkSample& sample);

}  // namespace netmod::model
