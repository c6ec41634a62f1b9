#include "netmod/eval/pipeline.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "netmod/qt/mm1b.hpp"

namespace netmod::eval {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<NetworkSample> generate_samples(const datagen::GenerationSpec& spec, int count,
                                            uint64_t seed) {
  spec.validate();
  std::vector<NetworkSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    uint64_t topo_seed = derive_seed(seed, 2 * (uint64_t)k);
    uint64_t cfg_seed = derive_seed(seed, 2 * (uint64_t)k + 1);
    Rng pick(topo_seed);
    int n = spec.n_nodes_lo + (int)pick.uniform_index((uint64_t)(spec.n_nodes_hi - spec.n_nodes_lo + 1));
    double alpha = pick.uniform(spec.alpha_lo, spec.alpha_hi);
    double beta = pick.uniform(spec.beta_lo, spec.beta_hi);
    TopologySpec topo = datagen::generate_topology(n, alpha, beta, pick.raw(), spec);
    out.push_back(datagen::randomize_sample(topo, spec, cfg_seed));
  }
  return out;
}

void simulate_labels(std::vector<NetworkSample>& samples, const sim::SimOptions& opts,
                     int workers) {
  parallel_for((int)samples.size(), workers, [&](int i) {
    sim::SimOptions o = opts;
    o.seed = derive_seed(opts.seed, (uint64_t)i);
    auto res = sim::simulate(samples[i], o);
    samples[i].set_labels(std::move(res.flow_metrics));
  });
}

std::vector<double> flatten_metric(const std::vector<std::vector<FlowMetrics>>& per_sample,
                                   model::Target target) {
  std::vector<double> out;
  for (const auto& metrics : per_sample)
    for (const auto& m : metrics) {
      switch (target) {
        case model::Target::Delay: out.push_back(m.mean_delay); break;
        case model::Target::Jitter: out.push_back(m.jitter); break;
        case model::Target::Loss: out.push_back(m.loss_ratio); break;
      }
    }
  return out;
}

std::vector<std::vector<FlowMetrics>> qt_predictions(const std::vector<NetworkSample>& samples,
                                                     int workers) {
  std::vector<std::vector<FlowMetrics>> out(samples.size());
  parallel_for((int)samples.size(), workers,
               [&](int i) { out[i] = qt::qt_predict(samples[i]); });
  return out;
}

std::vector<std::vector<FlowMetrics>> model_predictions(const diff::ParamStore& params,
                                                        const model::ModelConfig& config,
                                                        const std::vector<NetworkSample>& samples,
                                                        int workers) {
  std::vector<std::vector<FlowMetrics>> out(samples.size());
  parallel_for((int)samples.size(), workers,
               [&](int i) { out[i] = model::predict(params, config, samples[i]).metrics; });
  return out;
}

MetricReport score(const std::vector<NetworkSample>& samples,
                   const std::vector<std::vector<FlowMetrics>>& predictions,
                   model::Target target) {
  std::vector<std::vector<FlowMetrics>> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.labels()) fail(Errc::UnlabeledSample, "scoring needs labeled samples");
    labels.push_back(*s.labels());
  }
  MetricReport r =
      compute_metrics(flatten_metric(predictions, target), flatten_metric(labels, target));
  r.target = model::target_name(target);
  return r;
}

}  // namespace netmod::eval
