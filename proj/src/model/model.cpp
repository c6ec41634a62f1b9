#include "netmod/model/model.hpp"

#include <cmath>

namespace netmod::model {

using diff::BoundParams;
using diff::ParamStore;
using diff::Tape;
using diff::Tensor;
using diff::Var;

void ModelConfig::validate() const {
  if (hidden_dim < 1) fail(Errc::SchemaMismatch, "hidden_dim must be >= 1");
  if (iterations < 1) fail(Errc::SchemaMismatch, "iterations must be >= 1");
  if (!(norms.ti_hi > norms.ti_lo)) fail(Errc::SchemaMismatch, "bad traffic intensity range");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  return nlohmann::ordered_json{{"hidden_dim", hidden_dim},
                                {"iterations", iterations},
                                {"ablate_load", ablate_load},
                                {"ablate_occupancy", ablate_occupancy},
                                {"norms",
                                 {{"ti_lo", norms.ti_lo},
                                  {"ti_hi", norms.ti_hi},
                                  {"buffer_hi", norms.buffer_hi},
                                  {"occupancy_scale", norms.occupancy_scale},
                                  {"capacity_scale", norms.capacity_scale}}}};
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  try {
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.iterations = j.at("iterations").get<int>();
    c.ablate_load = j.at("ablate_load").get<bool>();
    c.ablate_occupancy = j.at("ablate_occupancy").get<bool>();
    const auto& n = j.at("norms");
    c.norms.ti_lo = n.at("ti_lo").get<double>();
    c.norms.ti_hi = n.at("ti_hi").get<double>();
    c.norms.buffer_hi = n.at("buffer_hi").get<double>();
    c.norms.occupancy_scale = n.at("occupancy_scale").get<double>();
    c.norms.capacity_scale = n.at("capacity_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

ParamStore init_parameters(const ModelConfig& config, uint64_t seed) {
  config.validate();
  const int h = config.hidden_dim;
  ParamStore store;
  Rng rng(derive_seed(seed, 0x6d6f64656cULL));
  diff::init_mlp(store, "hsf", {traffic::kFlowFeatureDim, h, h}, rng);
  diff::init_mlp(store, "hsq", {kQueueFeatureDim, h, h}, rng);
  diff::init_mlp(store, "hsl", {kLinkFeatureDim, h, h}, rng);
  diff::init_gru(store, "frnn", 2 * h, h, rng);
  diff::init_gru(store, "uq", h, h, rng);
  diff::init_gru(store, "lrnn", h, h, rng);
  diff::init_mlp(store, "rfd", {h, h, h, 1}, rng);
  diff::init_mlp(store, "rfj", {h, h, h, 1}, rng);
  diff::init_mlp(store, "rfl", {h, h, h, 1}, rng);
  return store;
}

MpPlan MpPlan::build(const NetworkSample& sample) {
  MpPlan plan;
  plan.n_flows = sample.num_flows();
  plan.n_queues = sample.num_queues();
  plan.n_links = sample.num_links();

  int max_len = 0;
  for (int fi = 0; fi < plan.n_flows; ++fi) {
    plan.total_hops += (int)sample.flow_path(fi).size();
    max_len = std::max(max_len, (int)sample.flow_path(fi).size());
  }
  plan.flow_pos.resize(max_len);
  plan.hop_queue.reserve(plan.total_hops);
  plan.hop_flow.reserve(plan.total_hops);
  plan.hop_inv_cap.reserve(plan.total_hops);
  plan.hop_trans.reserve(plan.total_hops);
  plan.hop_port_buffer.reserve(plan.total_hops);
  plan.ending_row_of_flow.assign(plan.n_flows, -1);

  std::vector<int64_t> prev_row(plan.n_flows, -1);
  int64_t ending_rows = 0;
  for (int m = 0; m < max_len; ++m) {
    FlowPos& pos = plan.flow_pos[m];
    for (int fi = 0; fi < plan.n_flows; ++fi) {
      const auto& path = sample.flow_path(fi);
      if ((int)path.size() <= m) continue;
      auto [qi, li] = path[m];
      int64_t local = (int64_t)pos.flows.size();
      pos.flows.push_back(fi);
      pos.queues.push_back(qi);
      pos.links.push_back(li);
      if (m > 0) pos.carried.push_back(prev_row[fi]);
      prev_row[fi] = local;

      plan.hop_queue.push_back(qi);
      plan.hop_flow.push_back(fi);
      double cap = sample.link(li).capacity;
      plan.hop_inv_cap.push_back(1.0 / cap);
      plan.hop_trans.push_back(sample.flow(fi).avg_packet_size / cap);
      double port_buffer = 0.0;
      for (int q2 : sample.queues_of_link(li)) port_buffer += sample.queue(q2).buffer_bits;
      plan.hop_port_buffer.push_back(port_buffer);
    }
    for (int64_t local = 0; local < (int64_t)pos.flows.size(); ++local) {
      int fi = (int)pos.flows[local];
      if ((int)sample.flow_path(fi).size() == m + 1) {
        pos.ending.push_back(local);
        plan.ending_row_of_flow[fi] = ending_rows++;
      }
    }
  }

  int max_queues = 0;
  for (int li = 0; li < plan.n_links; ++li)
    max_queues = std::max(max_queues, (int)sample.queues_of_link(li).size());
  plan.link_pos.resize(max_queues);
  for (int li = 0; li < plan.n_links; ++li) {
    const auto& qs = sample.queues_of_link(li);
    for (int j = 0; j < (int)qs.size(); ++j) {
      plan.link_pos[j].links.push_back(li);
      plan.link_pos[j].queues.push_back(qs[j]);
    }
  }
  return plan;
}

HiddenVars init_states(Tape& tp, const BoundParams& p, const NetworkSample& sample,
                       const MpPlan& plan, const ModelConfig& config) {
  Tensor xf(plan.n_flows, traffic::kFlowFeatureDim);
  for (int fi = 0; fi < plan.n_flows; ++fi) {
    auto row = traffic::feature_vector(sample.flow(fi).traffic, config.norms);
    std::copy(row.begin(), row.end(), xf.data() + fi * xf.cols);
  }

  Tensor xq(plan.n_queues, kQueueFeatureDim);
  for (int qi = 0; qi < plan.n_queues; ++qi) {
    const auto& ref = sample.queue(qi);
    xq.at(qi, 0) = ref.buffer_bits / config.norms.buffer_hi;
    xq.at(qi, 1 + ref.position) = 1.0;
    xq.at(qi, 1 + kMaxQueuesPerPort) = ref.weight;
  }

  Tensor xl(plan.n_links, kLinkFeatureDim);
  for (int li = 0; li < plan.n_links; ++li) {
    xl.at(li, 0) = config.ablate_load
                       ? sample.link(li).capacity / config.norms.capacity_scale
                       : sample.link_offered_load(li);
    xl.at(li, 1 + (int)sample.link(li).port.policy) = 1.0;
  }

  HiddenVars st;
  st.x_f = tp.leaf(std::move(xf));
  st.x_q = tp.leaf(std::move(xq));
  st.x_l = tp.leaf(std::move(xl));
  st.h_f = diff::mlp(tp, p, "hsf", st.x_f, 2, diff::Activation::Relu);
  st.h_q = diff::mlp(tp, p, "hsq", st.x_q, 2, diff::Activation::Relu);
  st.h_l = diff::mlp(tp, p, "hsl", st.x_l, 2, diff::Activation::Relu);
  st.h_fl = tp.leaf(Tensor::zeros(plan.total_hops, config.hidden_dim));
  return st;
}

HiddenVars message_passing(Tape& tp, const BoundParams& p, const MpPlan& plan, HiddenVars states,
                           int iterations) {
  diff::GruVars frnn = diff::bind_gru(p, "frnn");
  diff::GruVars uq = diff::bind_gru(p, "uq");
  diff::GruVars lrnn = diff::bind_gru(p, "lrnn");

  for (int t = 0; t < iterations; ++t) {
    // flow stage: run the flow cell along every path, batched by position;
    // each hop's cell output is both the next cell state and the message to
    // the hop's queue. Flows still on their path are a subsequence of the
    // previous position, so states thread through cheap sub-gathers.
    std::vector<Var> msg_parts, ending_parts;
    Var carried;
    for (size_t m = 0; m < plan.flow_pos.size(); ++m) {
      const auto& pos = plan.flow_pos[m];
      Var h_sub = m == 0 ? tp.gather_rows(states.h_f, pos.flows)
                         : tp.gather_rows(carried, pos.carried);
      Var in_q = tp.gather_rows(states.h_q, pos.queues);
      Var in_l = tp.gather_rows(states.h_l, pos.links);
      Var x = tp.concat_cols(in_q, in_l);
      Var h_new = diff::gru_step(tp, h_sub, x, frnn);
      carried = h_new;
      msg_parts.push_back(h_new);
      if (!pos.ending.empty()) ending_parts.push_back(tp.gather_rows(h_new, pos.ending));
    }
    Var msgs = tp.concat_rows(msg_parts);
    // each flow ends exactly once; un-permute the ending blocks back to
    // ascending flow order
    states.h_f = tp.gather_rows(tp.concat_rows(ending_parts), plan.ending_row_of_flow);
    states.h_fl = msgs;

    // queue stage: order-independent sum of messages, one cell update
    Var aggregated = tp.segment_sum(msgs, plan.hop_queue, plan.n_queues);
    states.h_q = diff::gru_step(tp, states.h_q, aggregated, uq);

    // link stage: run the link cell over the port's queues in priority order
    Var h_l = states.h_l;
    for (const auto& pos : plan.link_pos) {
      Var h_sub = tp.gather_rows(h_l, pos.links);
      Var m_q = tp.gather_rows(states.h_q, pos.queues);
      Var h_new = diff::gru_step(tp, h_sub, m_q, lrnn);
      h_l = tp.scatter_rows(h_l, pos.links, h_new);
    }
    states.h_l = h_l;
  }
  return states;
}

ReadoutVars readout(Tape& tp, const BoundParams& p, const MpPlan& plan, const HiddenVars& states,
                    const ModelConfig& config) {
  ReadoutVars out;
  out.loss = diff::mlp(tp, p, "rfl", states.h_f, 3, diff::Activation::Sigmoid);

  if (config.ablate_occupancy) {
    // variant: delay and jitter read directly off the flow state
    out.delay = tp.softplus(diff::mlp(tp, p, "rfd", states.h_f, 3, diff::Activation::Linear));
    out.jitter = tp.softplus(diff::mlp(tp, p, "rfj", states.h_f, 3, diff::Activation::Linear));
    return out;
  }

  // effective occupancy per hop (bits, nonnegative by construction), turned
  // into a queuing delay by dividing by the hop capacity; the transmission
  // term is a constant of the sample
  Var occ_raw = diff::mlp(tp, p, "rfd", states.h_fl, 3, diff::Activation::Linear);
  Var occ = tp.affine(tp.softplus(occ_raw), config.norms.occupancy_scale, 0.0);
  out.occupancy = occ;
  Var queuing = tp.row_scale(occ, plan.hop_inv_cap);
  Var delay = tp.segment_sum(queuing, plan.hop_flow, plan.n_flows);
  Tensor trans(plan.n_flows, 1);
  for (int64_t row = 0; row < plan.total_hops; ++row)
    trans.v[plan.hop_flow[row]] += plan.hop_trans[row];
  out.delay = tp.add_const(delay, std::move(trans));

  Var jit_raw = diff::mlp(tp, p, "rfj", states.h_fl, 3, diff::Activation::Linear);
  Var jit = tp.affine(tp.softplus(jit_raw), config.norms.occupancy_scale, 0.0);
  out.jitter = tp.segment_sum(tp.row_scale(jit, plan.hop_inv_cap), plan.hop_flow, plan.n_flows);
  return out;
}

const char* target_name(Target t) {
  switch (t) {
    case Target::Delay: return "delay";
    case Target::Jitter: return "jitter";
    case Target::Loss: return "loss";
  }
  return "?";
}

Target target_from_name(const std::string& name) {
  if (name == "delay") return Target::Delay;
  if (name == "jitter") return Target::Jitter;
  if (name == "loss") return Target::Loss;
  fail(Errc::ParseError, "unknown target '" + name + "'");
}

Var prediction_loss(Tape& tp, const ReadoutVars& out, const std::vector<FlowMetrics>& labels,
                    Target target) {
  const int64_t n = (int64_t)labels.size();
  Tensor truth(n, 1);
  switch (target) {
    case Target::Delay: {
      Tensor inv(n, 1);
      for (int64_t i = 0; i < n; ++i) {
        if (!(labels[i].mean_delay > 0))
          fail(Errc::ZeroLabel, "MAPE needs positive delay labels");
        truth.v[i] = -labels[i].mean_delay;
        inv.v[i] = 1.0 / labels[i].mean_delay;
      }
      return tp.reduce_mean(tp.mul_const(tp.abs(tp.add_const(out.delay, std::move(truth))),
                                         std::move(inv)));
    }
    case Target::Jitter: {
      for (int64_t i = 0; i < n; ++i) truth.v[i] = -labels[i].jitter;
      return tp.reduce_mean(tp.square(tp.add_const(out.jitter, std::move(truth))));
    }
    case Target::Loss: {
      for (int64_t i = 0; i < n; ++i) truth.v[i] = -labels[i].loss_ratio;
      return tp.reduce_mean(tp.abs(tp.add_const(out.loss, std::move(truth))));
    }
  }
  fail(Errc::ZeroLabel, "unreachable");
}

double loss_fn(const std::vector<FlowMetrics>& pred, const std::vector<FlowMetrics>& labels,
               Target target) {
  if (pred.size() != labels.size()) fail(Errc::LengthMismatch, "prediction/label sets differ");
  if (pred.empty()) fail(Errc::LengthMismatch, "empty prediction set");
  double total = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    switch (target) {
      case Target::Delay:
        if (!(labels[i].mean_delay > 0)) fail(Errc::ZeroLabel, "MAPE needs positive delay labels");
        total += std::abs(pred[i].mean_delay - labels[i].mean_delay) / labels[i].mean_delay;
        break;
      case Target::Jitter: {
        double d = pred[i].jitter - labels[i].jitter;
        total += d * d;
        break;
      }
      case Target::Loss: total += std::abs(pred[i].loss_ratio - labels[i].loss_ratio); break;
    }
  }
  return total / (double)pred.size();
}

PredictResult predict(const ParamStore& params, const ModelConfig& config,
                      const NetworkSample& sample) {
  config.validate();
  if (!params.contains("hsf.l0.w") ||
      params.at("hsf.l0.w").cols != config.hidden_dim)
    fail(Errc::SchemaMismatch, "parameters do not match the model configuration");

  MpPlan plan = MpPlan::build(sample);
  Tape tp(false);
  BoundParams p(tp, params);
  HiddenVars st = init_states(tp, p, sample, plan, config);
  st = message_passing(tp, p, plan, st, config.iterations);
  ReadoutVars out = readout(tp, p, plan, st, config);

  PredictResult res;
  res.metrics.resize(plan.n_flows);
  const Tensor& d = tp.value(out.delay);
  const Tensor& j = tp.value(out.jitter);
  const Tensor& l = tp.value(out.loss);
  for (int fi = 0; fi < plan.n_flows; ++fi) {
    res.metrics[fi].mean_delay = d.v[fi];
    res.metrics[fi].jitter = j.v[fi];
    res.metrics[fi].loss_ratio = l.v[fi];
  }
  if (out.occupancy.valid()) {
    // flag (never clamp) occupancies beyond the hop's total port buffer
    const Tensor& occ = tp.value(out.occupancy);
    for (int64_t row = 0; row < plan.total_hops; ++row)
      if (occ.v[row] > plan.hop_port_buffer[row]) ++res.occupancy_flags;
  }
  return res;
}

}  // namespace netmod::model
