// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failures. --only N runs a single
// criterion, --quick shrinks the slow pipelines for development runs.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <optional>

#include "netmod/eval/pipeline.hpp"
#include "netmod/qt/mm1b.hpp"
#include "fixtures.hpp"

using namespace netmod;
using Clock = std::chrono::steady_clock;

namespace {

int g_workers = 2;
bool g_quick = false;

struct Outcome {
  bool pass;
  std::string detail;
};

double elapsed(Clock::time_point from) {
  return std::chrono::duration<double>(Clock::now() - from).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// ---- criterion 1: simulator against M/M/1/K closed forms ----
Outcome criterion1() {
  bool pass = true;
  std::string detail;
  for (double rho : {0.3, 0.5, 0.8}) {
    for (int k : {8, 32}) {
      auto s = fixtures::mm1_sample(rho, k);
      auto res = sim::simulate(s, {100000.0, 5000.0, 11});
      auto sol = qt::mm1b_solve(rho, 1.0, k);
      double blocking_err = std::abs(res.flow_metrics[0].loss_ratio - sol.blocking);
      double sojourn_err =
          std::abs(res.flow_metrics[0].mean_delay - sol.mean_delay) / sol.mean_delay;
      bool ok = blocking_err < 0.01 && sojourn_err < 0.05;
      pass &= ok;
      detail += fmt("%srho=%.1f K=%d: dBlock %.4f dSojourn %.3f", detail.empty() ? "" : "; ",
                    rho, k, blocking_err, sojourn_err);
    }
  }
  return {pass, detail};
}

// ---- criterion 2: queuing theory exactness and the regime where it holds ----
Outcome criterion2() {
  auto sol = qt::mm1b_solve(0.5, 1.0, 2);
  double closed_form_err = std::abs(sol.blocking - 1.0 / 7.0);
  bool exact = closed_form_err < 1e-12;

  // single-hop Poisson samples with exponential sizes: the assumptions hold
  std::vector<double> pred, truth;
  for (double rho : {0.3, 0.5, 0.7}) {
    for (uint64_t seed : {1ull, 2ull}) {
      auto s = fixtures::mm1_sample(rho, 64);
      auto res = sim::simulate(s, {100000.0, 5000.0, derive_seed(seed, 17)});
      auto q = qt::qt_predict(s);
      pred.push_back(q[0].mean_delay);
      truth.push_back(res.flow_metrics[0].mean_delay);
    }
  }
  auto m = eval::compute_metrics(pred, truth);
  bool regime = m.mape < 0.05;
  return {exact && regime,
          fmt("blocking(1/7) err %.2e; single-hop delay MAPE %.4f", closed_form_err, m.mape)};
}

// ---- criterion 3: full-model gradients against finite differences ----
Outcome criterion3() {
  TopologySpec topo;
  topo.nodes = {"a", "b", "c"};
  auto bidi = [&](const std::string& id, const std::string& u, const std::string& v, double cap,
                  SchedPolicy pol, int nq) {
    topo.links.push_back(fixtures::link(id, u, v, cap, pol, nq));
  };
  bidi("ab", "a", "b", 900.0, SchedPolicy::Wfq, 2);
  bidi("ba", "b", "a", 1100.0, SchedPolicy::Fifo, 1);
  bidi("bc", "b", "c", 1000.0, SchedPolicy::StrictPriority, 3);
  bidi("cb", "c", "b", 800.0, SchedPolicy::Drr, 2);
  bidi("ca", "c", "a", 1200.0, SchedPolicy::Fifo, 1);
  bidi("ac", "a", "c", 1000.0, SchedPolicy::Fifo, 1);

  traffic::Descriptor onoff;
  onoff.model = traffic::Model::OnOff;
  onoff.lambda = 700.0;
  onoff.t_on = 4.0;
  onoff.t_off = 6.0;
  onoff.packet_size = traffic::PacketSizeDist::three_point({500, 1000, 1500}, {0.25, 0.5, 0.25});
  traffic::Descriptor ac;
  ac.model = traffic::Model::AutocorrelatedExp;
  ac.lambda = 500.0;
  ac.rho_a = 0.7;
  ac.packet_size = traffic::PacketSizeDist::constant(1000.0);

  std::vector<FlowSpec> flows = {
      fixtures::flow("f0", {{"ab:q1", "ab"}, {"bc:q0", "bc"}}, onoff, 1),
      fixtures::flow("f1", {{"bc:q2", "bc"}}, ac, 2),
      fixtures::flow("f2", {{"ca:q0", "ca"}}, fixtures::poisson(600.0)),
      fixtures::flow("f3", {{"ac:q0", "ac"}, {"cb:q1", "cb"}, {"ba:q0", "ba"}},
                     fixtures::cbr(400.0), 1),
  };
  auto s = NetworkSample::build(topo, flows, 550);
  std::vector<FlowMetrics> labels;
  for (auto& m : qt::qt_predict(s)) labels.push_back(m);
  s.set_labels(labels);

  model::ModelConfig cfg;  // full size: hidden 32, T = 8
  auto params = model::init_parameters(cfg, 77);
  model::MpPlan plan = model::MpPlan::build(s);

  auto loss_value = [&]() {
    diff::Tape tp;
    diff::BoundParams p(tp, params);
    auto st = model::init_states(tp, p, s, plan, cfg);
    st = model::message_passing(tp, p, plan, st, cfg.iterations);
    auto out = model::readout(tp, p, plan, st, cfg);
    return tp.value(model::prediction_loss(tp, out, *s.labels(), model::Target::Delay)).v[0];
  };

  diff::Tape tp;
  diff::BoundParams p(tp, params);
  auto st = model::init_states(tp, p, s, plan, cfg);
  st = model::message_passing(tp, p, plan, st, cfg.iterations);
  auto out = model::readout(tp, p, plan, st, cfg);
  auto loss = model::prediction_loss(tp, out, *s.labels(), model::Target::Delay);
  tp.backward(loss);

  std::vector<std::string> names;
  for (const auto& [name, t] : params.all()) names.push_back(name);
  Rng pick(5);
  double worst = 0.0;
  int checked = 0;
  for (int rep = 0; rep < 24; ++rep) {
    const std::string& name = names[pick.uniform_index(names.size())];
    diff::Tensor& t = params.at(name);
    int64_t i = (int64_t)pick.uniform_index((uint64_t)t.size());
    double ad = p.grad(name).v[i];
    const double eps = 1e-5;
    double x0 = t.v[i];
    t.v[i] = x0 + eps;
    double hi = loss_value();
    t.v[i] = x0 - eps;
    double lo = loss_value();
    t.v[i] = x0;
    double numeric = (hi - lo) / (2 * eps);
    double rel = std::abs(ad - numeric) / std::max({std::abs(ad), std::abs(numeric), 1e-4});
    worst = std::max(worst, rel);
    ++checked;
  }
  return {worst < 1e-4 && checked >= 20,
          fmt("%d parameters checked, worst relative error %.2e", checked, worst)};
}

// ---- criteria 4/5/7 share pipeline machinery ----

struct TrainedEval {
  diff::ParamStore params;
  model::ModelConfig config;
};

TrainedEval train_on(const std::vector<NetworkSample>& train_set, model::ModelConfig cfg,
                     int epochs, int spe, uint64_t seed) {
  model::TrainOptions opts;
  opts.config = cfg;
  opts.target = model::Target::Delay;
  opts.epochs = epochs;
  opts.samples_per_epoch = spe;
  opts.seed = seed;
  auto res = model::train(train_set, opts);
  return {std::move(res.params), res.config};
}

double delay_mape(const std::vector<NetworkSample>& set, const TrainedEval& te) {
  return eval::score(set, eval::model_predictions(te.params, te.config, set, g_workers),
                     model::Target::Delay)
      .mape;
}

double delay_mape_qt(const std::vector<NetworkSample>& set) {
  return eval::score(set, eval::qt_predictions(set, g_workers), model::Target::Delay).mape;
}

Outcome criterion4() {
  int n_train = g_quick ? 60 : 200;
  int n_test = g_quick ? 30 : 100;
  int epochs = g_quick ? 10 : 50;
  int spe = g_quick ? 60 : 200;

  bool pass = true;
  std::string detail;
  struct Cond {
    const char* name;
    traffic::Model traffic;
  };
  for (Cond cond : {Cond{"poisson", traffic::Model::Poisson},
                    Cond{"acexp", traffic::Model::AutocorrelatedExp}}) {
    datagen::GenerationSpec gen;  // 5-8 nodes
    gen.traffic_pool = {cond.traffic};
    auto train_set = eval::generate_samples(gen, n_train, derive_seed(41, cond.traffic == traffic::Model::Poisson ? 0 : 1));
    eval::simulate_labels(train_set, {8000.0, 800.0, 43}, g_workers);
    auto test_set = eval::generate_samples(gen, n_test, derive_seed(47, cond.traffic == traffic::Model::Poisson ? 0 : 1));
    eval::simulate_labels(test_set, {8000.0, 800.0, 53}, g_workers);

    auto te = train_on(train_set, model::ModelConfig{}, epochs, spe, 3);
    double gnn = delay_mape(test_set, te);
    double qtm = delay_mape_qt(test_set);

    bool absolute = gnn <= 0.15;
    bool margin = cond.traffic != traffic::Model::AutocorrelatedExp || qtm >= 2.0 * gnn;
    pass &= absolute && margin;
    detail += fmt("%s%s: gnn %.4f qt %.4f", detail.empty() ? "" : "; ", cond.name, gnn, qtm);
  }
  return {pass, detail};
}

// shared state between criteria 5 and 7
struct ScaleStudy {
  std::vector<NetworkSample> train_set, held_out;
  std::vector<std::vector<NetworkSample>> bins;
  std::vector<int> bin_nodes{20, 35, 50};
  TrainedEval full;
  double held_out_mape = 0.0;
  std::vector<double> bin_mape;
};

std::optional<ScaleStudy> g_scale;

ScaleStudy& scale_study() {
  if (g_scale) return *g_scale;
  ScaleStudy st;
  int n_train = g_quick ? 60 : 200;
  int n_test = g_quick ? 20 : 50;
  int epochs = g_quick ? 10 : 50;
  int spe = g_quick ? 60 : 200;
  int per_bin = g_quick ? 2 : 6;

  datagen::GenerationSpec gen;
  gen.n_nodes_lo = 5;
  gen.n_nodes_hi = 10;
  st.train_set = eval::generate_samples(gen, n_train, 61);
  eval::simulate_labels(st.train_set, {8000.0, 800.0, 67}, g_workers);
  st.held_out = eval::generate_samples(gen, n_test, 71);
  eval::simulate_labels(st.held_out, {8000.0, 800.0, 73}, g_workers);
  for (int nodes : st.bin_nodes) {
    datagen::GenerationSpec big = gen;
    big.n_nodes_lo = big.n_nodes_hi = nodes;
    auto bin = eval::generate_samples(big, per_bin, derive_seed(79, (uint64_t)nodes));
    eval::simulate_labels(bin, {6000.0, 600.0, derive_seed(83, (uint64_t)nodes)}, g_workers);
    st.bins.push_back(std::move(bin));
  }

  st.full = train_on(st.train_set, model::ModelConfig{}, epochs, spe, 5);
  st.held_out_mape = delay_mape(st.held_out, st.full);
  for (auto& bin : st.bins) st.bin_mape.push_back(delay_mape(bin, st.full));
  g_scale = std::move(st);
  return *g_scale;
}

Outcome criterion5() {
  ScaleStudy& st = scale_study();
  double at50 = st.bin_mape.back();
  bool pass = at50 <= 2.0 * st.held_out_mape && at50 <= 0.20;
  std::string detail = fmt("held-out(5-10) %.4f", st.held_out_mape);
  for (size_t b = 0; b < st.bins.size(); ++b)
    detail += fmt("; %d-node %.4f", st.bin_nodes[b], st.bin_mape[b]);
  return {pass, detail};
}

Outcome criterion6() {
  // condensed re-run of the property suites' load-bearing invariants; the
  // full versions live in the unit test binaries that ctest also executes
  bool pass = true;
  std::string detail;

  // conservation + causality + determinism of the simulator
  auto s = fixtures::shared_tail_sample(900, 800, 1000, 1100);
  auto a = sim::simulate(s, {4000.0, 400.0, 5});
  auto b = sim::simulate(s, {4000.0, 400.0, 5});
  bool det = a.event_count == b.event_count;
  bool conserve = true, causal = true;
  for (int fi = 0; fi < s.num_flows(); ++fi) {
    det &= a.flow_metrics[fi].mean_delay == b.flow_metrics[fi].mean_delay;
    conserve &= a.sent[fi] >= a.delivered[fi] + a.dropped[fi];
    double floor = 0.0;
    for (auto [qi, li] : s.flow_path(fi))
      floor += s.flow(fi).avg_packet_size / s.link(li).capacity;
    causal &= a.flow_metrics[fi].mean_delay >= floor * (1 - 1e-12);
  }
  pass &= det && conserve && causal;
  detail += fmt("sim det/conserve/causal %d/%d/%d", det, conserve, causal);

  // work conservation on a saturated port
  {
    TopologySpec t = fixtures::chain(2, 1000.0);
    auto sat = NetworkSample::build(
        t, {fixtures::flow("f", {{"l0:q0", "l0"}}, fixtures::poisson(3000.0))}, 3000);
    auto res = sim::simulate(sat, {20000.0, 2000.0, 7});
    double rate = (double)res.delivered[0] * 1000.0 / 18000.0;
    bool work = std::abs(rate - 1000.0) / 1000.0 < 0.02;
    pass &= work;
    detail += fmt("; work-conserving %d", work);
  }

  // model invariances: permutation, transmission bound, scale independence
  {
    model::ModelConfig cfg;
    cfg.hidden_dim = 16;
    cfg.iterations = 4;
    auto params = model::init_parameters(cfg, 19);
    auto base = fixtures::shared_tail_sample(600, 500, 900, 1200);
    auto flows = base.flows();
    std::reverse(flows.begin(), flows.end());
    auto perm = NetworkSample::build(base.topology(), flows, base.traffic_intensity());
    auto pa = model::predict(params, cfg, base);
    auto pb = model::predict(params, cfg, perm);
    bool permutation = true;
    for (const char* id : {"flow1", "flow2"})
      permutation &= std::abs(pa.metrics[base.flow_index(id)].mean_delay -
                              pb.metrics[perm.flow_index(id)].mean_delay) < 1e-9;

    bool bound = true;
    for (int fi = 0; fi < base.num_flows(); ++fi) {
      double floor = 0.0;
      for (auto [qi, li] : base.flow_path(fi))
        floor += base.flow(fi).avg_packet_size / base.link(li).capacity;
      bound &= pa.metrics[fi].mean_delay >= floor;
      bound &= pa.metrics[fi].loss_ratio > 0 && pa.metrics[fi].loss_ratio < 1;
    }

    TopologySpec t2 = base.topology();
    for (auto& l : t2.links) l.capacity *= 2.0;
    auto flows2 = base.flows();
    for (auto& f : flows2) {
      f.lambda *= 2.0;
      f.traffic.lambda *= 2.0;
    }
    auto scaled = NetworkSample::build(t2, flows2, base.traffic_intensity() * 2.0);
    model::ModelConfig cfg2 = cfg;
    cfg2.norms.ti_lo *= 2.0;
    cfg2.norms.ti_hi *= 2.0;
    auto ps = model::predict(params, cfg2, scaled);
    bool scale_free = true;
    for (int fi = 0; fi < base.num_flows(); ++fi)
      scale_free &= std::abs(ps.metrics[fi].mean_delay - 0.5 * pa.metrics[fi].mean_delay) <
                    1e-9 * std::max(1.0, pa.metrics[fi].mean_delay);
    pass &= permutation && bound && scale_free;
    detail += fmt("; model perm/bound/scale %d/%d/%d", permutation, bound, scale_free);
  }

  // metric exactness against an inline reference
  {
    Rng rng(3);
    std::vector<double> p(500), t(500);
    for (int i = 0; i < 500; ++i) {
      t[i] = rng.uniform(0.1, 5.0);
      p[i] = t[i] * rng.uniform(0.8, 1.2);
    }
    auto m = eval::compute_metrics(p, t);
    double mae = 0;
    for (int i = 0; i < 500; ++i) mae += std::abs(p[i] - t[i]) / 500.0;
    bool metrics_ok = std::abs(m.mae - mae) < 1e-12;
    pass &= metrics_ok;
    detail += fmt("; metrics %d", metrics_ok);
  }
  return {pass, detail};
}

Outcome criterion7() {
  ScaleStudy& st = scale_study();
  model::ModelConfig ablated;
  ablated.ablate_occupancy = true;
  int epochs = g_quick ? 10 : 50;
  int spe = g_quick ? 60 : 200;
  auto te = train_on(st.train_set, ablated, epochs, spe, 5);

  // aggregate over all large-topology bins
  std::vector<NetworkSample> all_large;
  for (auto& bin : st.bins)
    for (auto& s : bin) all_large.push_back(s);
  double full_mape = delay_mape(all_large, st.full);
  double ablated_mape = delay_mape(all_large, te);
  return {ablated_mape > full_mape,
          fmt("large-topology delay MAPE: full %.4f, no-occupancy %.4f", full_mape,
              ablated_mape)};
}

Outcome criterion8() {
  datagen::GenerationSpec gen;
  gen.n_nodes_lo = gen.n_nodes_hi = 50;
  auto samples = eval::generate_samples(gen, 1, 123);
  model::ModelConfig cfg;
  auto params = model::init_parameters(cfg, 9);
  model::predict(params, cfg, samples[0]);  // warm caches
  double best = 1e9;
  for (int rep = 0; rep < 3; ++rep) {
    auto t0 = Clock::now();
    model::predict(params, cfg, samples[0]);
    best = std::min(best, elapsed(t0));
  }
  return {best < 1.0,
          fmt("50-node full-mesh (%d flows) predict: %.3f s single-threaded",
              samples[0].num_flows(), best)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--quick") == 0) g_quick = true;
    if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) g_workers = std::atoi(argv[++i]);
  }

  struct Criterion {
    int id;
    const char* title;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "simulator matches M/M/1/K closed forms", criterion1},
      {2, "queuing baseline exact and valid in its regime", criterion2},
      {3, "full-model gradients match finite differences", criterion3},
      {4, "trained model beats the queuing baseline", criterion4},
      {5, "scale generalization 5-10 -> 50 nodes", criterion5},
      {6, "invariant property suites", criterion6},
      {7, "occupancy ablation degrades scale generalization", criterion7},
      {8, "50-node inference under one second", criterion8},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && only != c.id) continue;
    auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s  [%.1fs]\n    %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.title, elapsed(t0), out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures;
}
