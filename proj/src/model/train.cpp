#include "netmod/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace netmod::model {

using diff::BoundParams;
using diff::ParamStore;
using diff::Tape;
using diff::Tensor;
using diff::Var;

namespace {

double sample_loss(const ParamStore& params, const ModelConfig& config, const NetworkSample& s,
                   const MpPlan& plan, Target target) {
  Tape tp;
  BoundParams p(tp, params);
  HiddenVars st = init_states(tp, p, s, plan, config);
  st = message_passing(tp, p, plan, st, config.iterations);
  ReadoutVars out = readout(tp, p, plan, st, config);
  Var loss = prediction_loss(tp, out, *s.labels(), target);
  return tp.value(loss).v[0];
}

}  // namespace

TrainResult train(const std::vector<NetworkSample>& dataset, const TrainOptions& opts) {
  opts.config.validate();
  if (opts.epochs < 0 || opts.samples_per_epoch < 1)
    fail(Errc::SchemaMismatch, "bad training budget");
  if (dataset.empty()) fail(Errc::UnlabeledSample, "empty training dataset");
  for (const auto& s : dataset)
    if (!s.labels()) fail(Errc::UnlabeledSample, "training requires labeled samples");

  // fixed validation split
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(opts.seed, 0x73706c6974ULL));
  for (int i = (int)order.size() - 1; i > 0; --i)
    std::swap(order[i], order[split_rng.uniform_index((uint64_t)i + 1)]);
  int n_val = (int)std::lround(opts.validation_fraction * (double)dataset.size());
  n_val = std::min(n_val, (int)dataset.size() - 1);
  std::vector<int> val_ix(order.begin(), order.begin() + n_val);
  std::vector<int> train_ix(order.begin() + n_val, order.end());

  std::vector<MpPlan> plans(dataset.size());
  std::vector<char> planned(dataset.size(), 0);
  auto plan_of = [&](int ix) -> const MpPlan& {
    if (!planned[ix]) {
      plans[ix] = MpPlan::build(dataset[ix]);
      planned[ix] = 1;
    }
    return plans[ix];
  };

  TrainResult res;
  res.config = opts.config;
  res.params = init_parameters(opts.config, opts.seed);
  diff::Adam adam(opts.learning_rate);

  ParamStore best = res.params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  auto mean_loss = [&](const std::vector<int>& ixs) {
    if (ixs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (int ix : ixs)
      total += sample_loss(res.params, opts.config, dataset[ix], plan_of(ix), opts.target);
    return total / (double)ixs.size();
  };

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(opts.seed, 0x65706f6368ULL + (uint64_t)epoch));
    std::vector<int> sched = train_ix;
    for (int i = (int)sched.size() - 1; i > 0; --i)
      std::swap(sched[i], sched[shuffle_rng.uniform_index((uint64_t)i + 1)]);

    double epoch_total = 0.0;
    int steps = opts.samples_per_epoch;
    for (int k = 0; k < steps; ++k) {
      int ix = sched[k % sched.size()];
      const NetworkSample& s = dataset[ix];
      const MpPlan& plan = plan_of(ix);

      Tape tp;
      BoundParams p(tp, res.params);
      HiddenVars st = init_states(tp, p, s, plan, opts.config);
      st = message_passing(tp, p, plan, st, opts.config.iterations);
      ReadoutVars out = readout(tp, p, plan, st, opts.config);
      Var loss = prediction_loss(tp, out, *s.labels(), opts.target);
      double loss_value = tp.value(loss).v[0];
      if (!std::isfinite(loss_value)) {
        res.diverged = true;
        res.params = best_epoch >= 0 ? best : res.params;
        res.best_val_loss = best_val;
        res.best_epoch = best_epoch;
        return res;
      }
      epoch_total += loss_value;
      tp.backward(loss);

      std::map<std::string, Tensor> grads;
      for (const auto& [name, t] : res.params.all()) grads.emplace(name, p.grad(name));
      adam.step(res.params, grads);
    }

    EpochStats st;
    st.train_loss = epoch_total / (double)steps;
    st.val_loss = val_ix.empty() ? st.train_loss : mean_loss(val_ix);
    res.history.push_back(st);
    if (opts.verbose)
      std::fprintf(stderr, "epoch %3d  train %.5f  val %.5f\n", epoch, st.train_loss,
                   st.val_loss);

    if (std::isfinite(st.val_loss) && st.val_loss < best_val) {
      best_val = st.val_loss;
      best = res.params;
      best_epoch = epoch;
    }
  }

  if (best_epoch >= 0) res.params = best;
  res.best_val_loss = best_val;
  res.best_epoch = best_epoch;
  return res;
}

}  // namespace netmod::model
