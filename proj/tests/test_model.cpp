#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "netmod/model/train.hpp"
#include "netmod/qt/mm1b.hpp"

using namespace netmod;
using namespace netmod::model;
using namespace fixtures;
using diff::BoundParams;
using diff::Tape;
using diff::Tensor;
using diff::Var;

namespace {

ModelConfig small_config(int h = 16, int T = 4) {
  ModelConfig c;
  c.hidden_dim = h;
  c.iterations = T;
  return c;
}

// forward pass up to the hidden states
HiddenVars forward_states(Tape& tp, const diff::ParamStore& params, const ModelConfig& c,
                          const NetworkSample& s, const MpPlan& plan, int T) {
  BoundParams p(tp, params);
  HiddenVars st = init_states(tp, p, s, plan, c);
  return message_passing(tp, p, plan, st, T);
}

// flows of shared_tail_sample declared in the opposite order
NetworkSample shared_tail_reversed() {
  auto base = shared_tail_sample();
  auto flows = base.flows();
  std::reverse(flows.begin(), flows.end());
  return NetworkSample::build(base.topology(), flows, base.traffic_intensity());
}

std::vector<FlowMetrics> qt_labels(const NetworkSample& s) { return qt::qt_predict(s); }

// small labeled dataset over varied chain samples
std::vector<NetworkSample> toy_dataset(int n, uint64_t seed) {
  std::vector<NetworkSample> out;
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    double l1 = rng.uniform(300.0, 900.0);
    double l2 = rng.uniform(300.0, 900.0);
    auto s = shared_tail_sample(l1, l2, 1000.0, 1100.0);
    s.set_labels(qt_labels(s));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("identical flows embed to identical states") {
  TopologySpec t = chain(2);
  auto flows = std::vector<FlowSpec>{flow("a", {{"l0:q0", "l0"}}, poisson(600)),
                                     flow("b", {{"l0:q0", "l0"}}, poisson(600))};
  auto s = NetworkSample::build(t, flows, 600);
  auto c = small_config();
  auto params = init_parameters(c, 5);
  MpPlan plan = MpPlan::build(s);
  Tape tp;
  BoundParams p(tp, params);
  HiddenVars st = init_states(tp, p, s, plan, c);
  const Tensor& hf = tp.value(st.h_f);
  for (int64_t j = 0; j < hf.cols; ++j) CHECK(hf.at(0, j) == hf.at(1, j));

  // idle links share the zero load feature
  const Tensor& xl = tp.value(st.x_l);
  CHECK(xl.at(s.link_index("r0"), 0) == 0.0);
  // FIFO policy occupies the first one-hot slot
  CHECK(xl.at(s.link_index("l0"), 1) == 1.0);
}

TEST_CASE("T=0 leaves the initial states untouched") {
  auto s = shared_tail_sample();
  auto c = small_config();
  auto params = init_parameters(c, 7);
  MpPlan plan = MpPlan::build(s);
  Tape tp;
  BoundParams p(tp, params);
  HiddenVars init = init_states(tp, p, s, plan, c);
  HiddenVars after = message_passing(tp, p, plan, init, 0);
  CHECK(after.h_f.id == init.h_f.id);
  CHECK(after.h_q.id == init.h_q.id);
  CHECK(after.h_l.id == init.h_l.id);
}

TEST_CASE("queue aggregation is invariant to flow declaration order") {
  auto a = shared_tail_sample();
  auto b = shared_tail_reversed();
  auto c = small_config();
  auto params = init_parameters(c, 11);

  Tape ta, tb;
  auto sa = forward_states(ta, params, c, a, MpPlan::build(a), c.iterations);
  auto sb = forward_states(tb, params, c, b, MpPlan::build(b), c.iterations);
  int qa = a.queue_index("l3:q0");
  int qb = b.queue_index("l3:q0");
  const Tensor& hqa = ta.value(sa.h_q);
  const Tensor& hqb = tb.value(sb.h_q);
  for (int64_t j = 0; j < hqa.cols; ++j)
    CHECK(hqa.at(qa, j) == doctest::Approx(hqb.at(qb, j)).epsilon(1e-12));
}

TEST_CASE("prediction is equivariant under flow permutation") {
  auto a = shared_tail_sample();
  auto b = shared_tail_reversed();
  auto c = small_config();
  auto params = init_parameters(c, 13);
  auto pa = predict(params, c, a);
  auto pb = predict(params, c, b);
  for (const char* id : {"flow1", "flow2"}) {
    int ia = a.flow_index(id), ib = b.flow_index(id);
    CHECK(pa.metrics[ia].mean_delay ==
          doctest::Approx(pb.metrics[ib].mean_delay).epsilon(1e-9));
    CHECK(pa.metrics[ia].loss_ratio ==
          doctest::Approx(pb.metrics[ib].loss_ratio).epsilon(1e-9));
  }
}

TEST_CASE("prediction is invariant under graph relabeling") {
  auto a = shared_tail_sample();
  // relabel every identifier
  TopologySpec t = a.topology();
  auto rename = [](std::string s) { return "x_" + s; };
  for (auto& n : t.nodes) n = rename(n);
  for (auto& l : t.links) {
    l.id = rename(l.id);
    l.src = rename(l.src);
    l.dst = rename(l.dst);
    for (auto& q : l.port.queues) q.id = rename(q.id);
  }
  std::reverse(t.links.begin(), t.links.end());
  auto flows = a.flows();
  for (auto& f : flows) {
    f.id = rename(f.id);
    for (auto& [q, l] : f.path) {
      q = rename(q);
      l = rename(l);
    }
  }
  auto b = NetworkSample::build(t, flows, a.traffic_intensity());

  auto c = small_config();
  auto params = init_parameters(c, 17);
  auto pa = predict(params, c, a);
  auto pb = predict(params, c, b);
  for (const char* id : {"flow1", "flow2"}) {
    int ia = a.flow_index(id);
    int ib = b.flow_index("x_" + std::string(id));
    CHECK(pa.metrics[ia].mean_delay ==
          doctest::Approx(pb.metrics[ib].mean_delay).epsilon(1e-9));
    CHECK(pa.metrics[ia].jitter == doctest::Approx(pb.metrics[ib].jitter).epsilon(1e-9));
    CHECK(pa.metrics[ia].loss_ratio ==
          doctest::Approx(pb.metrics[ib].loss_ratio).epsilon(1e-9));
  }
}

TEST_CASE("delay respects the transmission floor; loss lives in (0,1)") {
  auto s = shared_tail_sample(800, 900, 700, 1300);
  auto c = small_config();
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    auto params = init_parameters(c, seed);
    auto out = predict(params, c, s);
    for (int fi = 0; fi < s.num_flows(); ++fi) {
      double floor = 0.0;
      for (auto [qi, li] : s.flow_path(fi))
        floor += s.flow(fi).avg_packet_size / s.link(li).capacity;
      CHECK(out.metrics[fi].mean_delay >= floor);
      CHECK(out.metrics[fi].loss_ratio > 0.0);
      CHECK(out.metrics[fi].loss_ratio < 1.0);
      CHECK(out.metrics[fi].jitter >= 0.0);
      CHECK(std::isfinite(out.metrics[fi].mean_delay));
    }
  }
}

TEST_CASE("coupled flows: gradient flows across the shared queue") {
  auto s = shared_tail_sample();
  auto c = small_config(16, 4);
  auto params = init_parameters(c, 19);
  MpPlan plan = MpPlan::build(s);

  Tape tp;
  BoundParams p(tp, params);
  HiddenVars st = init_states(tp, p, s, plan, c);
  HiddenVars after = message_passing(tp, p, plan, st, c.iterations);
  ReadoutVars out = readout(tp, p, plan, after, c);

  // scalar: flow2's predicted delay
  int f2 = s.flow_index("flow2");
  Var probe = tp.reduce_sum(tp.gather_rows(out.delay, {f2}));
  tp.backward(probe);
  // flow1's rate feature is column 0 of its x_f row
  int f1 = s.flow_index("flow1");
  double g = tp.grad(st.x_f).at(f1, 0);
  CHECK(g != 0.0);
}

TEST_CASE("rate/capacity scaling: identical hidden states, halved delays") {
  auto base = shared_tail_sample(600, 500, 900, 1200);
  // uniformly scaled universe: rates, capacities and the traffic-intensity
  // normalization all double; packet sizes and buffers stay
  const double k = 2.0;
  TopologySpec t2 = base.topology();
  for (auto& l : t2.links) l.capacity *= k;
  auto flows2 = base.flows();
  for (auto& f : flows2) {
    f.lambda *= k;
    f.traffic.lambda *= k;
  }
  auto scaled = NetworkSample::build(t2, flows2, base.traffic_intensity() * k);

  auto c = small_config();
  auto params = init_parameters(c, 23);
  ModelConfig c2 = c;
  c2.norms.ti_lo *= k;
  c2.norms.ti_hi *= k;

  MpPlan plan_a = MpPlan::build(base);
  MpPlan plan_b = MpPlan::build(scaled);
  Tape ta, tb;
  auto sa = forward_states(ta, params, c, base, plan_a, c.iterations);
  auto sb = forward_states(tb, params, c2, scaled, plan_b, c.iterations);
  const Tensor& ha = ta.value(sa.h_f);
  const Tensor& hb = tb.value(sb.h_f);
  for (int64_t i = 0; i < ha.size(); ++i) CHECK(std::abs(ha.v[i] - hb.v[i]) < 1e-9);

  auto pa = predict(params, c, base);
  auto pb = predict(params, c2, scaled);
  for (int fi = 0; fi < base.num_flows(); ++fi)
    CHECK(pb.metrics[fi].mean_delay ==
          doctest::Approx(0.5 * pa.metrics[fi].mean_delay).epsilon(1e-12));
}

TEST_CASE("loss_fn on plain prediction sets") {
  std::vector<FlowMetrics> labels{{1.0, 0.5, 0.01}};
  CHECK(loss_fn(labels, labels, Target::Delay) == 0.0);
  CHECK(loss_fn(labels, labels, Target::Jitter) == 0.0);
  CHECK(loss_fn(labels, labels, Target::Loss) == 0.0);

  std::vector<FlowMetrics> pred{{1.1, 0.5, 0.02}};
  CHECK(loss_fn(pred, labels, Target::Delay) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(loss_fn(pred, labels, Target::Loss) == doctest::Approx(0.01).epsilon(1e-12));

  std::vector<FlowMetrics> zero{{0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(loss_fn(pred, zero, Target::Delay), Error);
  CHECK_THROWS_AS(loss_fn({}, {}, Target::Delay), Error);
}

TEST_CASE("full-model gradients match finite differences") {
  auto s = shared_tail_sample(700, 400, 900, 1000);
  s.set_labels(qt_labels(s));
  auto c = small_config(8, 3);
  auto params = init_parameters(c, 29);
  MpPlan plan = MpPlan::build(s);

  auto loss_value = [&]() {
    Tape tp;
    BoundParams p(tp, params);
    HiddenVars st = init_states(tp, p, s, plan, c);
    st = message_passing(tp, p, plan, st, c.iterations);
    ReadoutVars out = readout(tp, p, plan, st, c);
    Var l = prediction_loss(tp, out, *s.labels(), Target::Delay);
    return tp.value(l).v[0];
  };

  Tape tp;
  BoundParams p(tp, params);
  HiddenVars st = init_states(tp, p, s, plan, c);
  st = message_passing(tp, p, plan, st, c.iterations);
  ReadoutVars out = readout(tp, p, plan, st, c);
  Var l = prediction_loss(tp, out, *s.labels(), Target::Delay);
  tp.backward(l);

  Rng pick(31);
  std::vector<std::string> names;
  for (const auto& [name, t] : params.all()) names.push_back(name);
  int checked = 0;
  for (int rep = 0; rep < 24; ++rep) {
    const std::string& name = names[pick.uniform_index(names.size())];
    Tensor& t = params.at(name);
    int64_t i = (int64_t)pick.uniform_index((uint64_t)t.size());
    double ad = p.grad(name).v[i];
    double x0 = t.v[i];
    const double eps = 1e-5;
    t.v[i] = x0 + eps;
    double hi = loss_value();
    t.v[i] = x0 - eps;
    double lo = loss_value();
    t.v[i] = x0;
    double numeric = (hi - lo) / (2 * eps);
    CHECK_MESSAGE(std::abs(ad - numeric) <=
                      1e-4 * std::max(std::abs(ad), std::abs(numeric)) + 1e-8,
                  name, "[", i, "] ad=", ad, " fd=", numeric);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("training reduces the loss on a toy set") {
  auto data = toy_dataset(10, 41);
  TrainOptions opts;
  opts.config = small_config(16, 4);
  opts.target = Target::Delay;
  opts.epochs = 50;
  opts.samples_per_epoch = 10;
  opts.seed = 3;
  auto res = train(data, opts);
  REQUIRE(res.history.size() == 50);
  CHECK(!res.diverged);
  CHECK(res.history.back().train_loss < res.history.front().train_loss);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  auto data = toy_dataset(4, 43);
  TrainOptions opts;
  opts.config = small_config(8, 2);
  opts.epochs = 2;
  opts.samples_per_epoch = 4;
  opts.learning_rate = 0.0;
  opts.seed = 5;
  auto res = train(data, opts);
  auto fresh = init_parameters(opts.config, opts.seed);
  for (const auto& [name, t] : fresh.all()) {
    const auto& u = res.params.at(name);
    for (int64_t i = 0; i < t.size(); ++i) CHECK(u.v[i] == t.v[i]);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto data = toy_dataset(6, 47);
  TrainOptions opts;
  opts.config = small_config(8, 2);
  opts.epochs = 3;
  opts.samples_per_epoch = 6;
  opts.seed = 7;
  auto a = train(data, opts);
  auto b = train(data, opts);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].val_loss == b.history[e].val_loss);
  }
}

TEST_CASE("training demands labels") {
  std::vector<NetworkSample> data;
  data.push_back(shared_tail_sample());
  TrainOptions opts;
  opts.config = small_config(8, 2);
  CHECK_THROWS_AS(train(data, opts), Error);
}
