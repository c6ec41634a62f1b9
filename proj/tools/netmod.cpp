// netmod: generate / simulate / train / predict / qt-baseline / evaluate /
// experiment over newline-delimited network sample records.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "netmod/core/io.hpp"
#include "netmod/diff/checkpoint.hpp"
#include "netmod/eval/experiments.hpp"
#include "netmod/qt/mm1b.hpp"

using namespace netmod;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitMissing = 3;

std::vector<NetworkSample> build_all(const std::vector<SampleRecord>& records) {
  std::vector<NetworkSample> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(rec.build());
  return out;
}

std::map<std::string, FlowMetrics> metrics_by_flow(const NetworkSample& s,
                                                   const std::vector<FlowMetrics>& m) {
  std::map<std::string, FlowMetrics> out;
  for (int fi = 0; fi < s.num_flows(); ++fi) out[s.flow(fi).id] = m[fi];
  return out;
}

void apply_config_file(eval::ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingArtifact, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("bad config file: ") + e.what());
  }
  if (j.contains("n_train")) cfg.n_train = j["n_train"].get<int>();
  if (j.contains("n_test")) cfg.n_test = j["n_test"].get<int>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("samples_per_epoch")) cfg.samples_per_epoch = j["samples_per_epoch"].get<int>();
  if (j.contains("sim_duration")) cfg.sim_duration = j["sim_duration"].get<double>();
  if (j.contains("sim_warmup")) cfg.sim_warmup = j["sim_warmup"].get<double>();
  if (j.contains("nodes")) {
    cfg.gen.n_nodes_lo = j["nodes"][0].get<int>();
    cfg.gen.n_nodes_hi = j["nodes"][1].get<int>();
  }
  if (j.contains("ti_range")) {
    cfg.gen.ti_lo = j["ti_range"][0].get<double>();
    cfg.gen.ti_hi = j["ti_range"][1].get<double>();
  }
  if (j.contains("scale_bins")) cfg.scale_bins = j["scale_bins"].get<std::vector<int>>();
  if (j.contains("scale_eval_per_bin")) cfg.scale_eval_per_bin = j["scale_eval_per_bin"].get<int>();
  if (j.contains("fewshot_sizes")) cfg.fewshot_sizes = j["fewshot_sizes"].get<std::vector<int>>();
  if (j.contains("targets")) {
    cfg.targets.clear();
    for (const auto& t : j["targets"]) cfg.targets.push_back(model::target_from_name(t));
  }
  if (j.contains("traffic_rows"))
    cfg.traffic_rows = j["traffic_rows"].get<std::vector<std::string>>();
  if (j.contains("traffic_pool")) {
    cfg.gen.traffic_pool.clear();
    for (const auto& m : j["traffic_pool"])
      cfg.gen.traffic_pool.push_back(traffic::model_from_name(m));
  }
  if (j.contains("policy_pool")) {
    cfg.gen.policy_pool.clear();
    for (const auto& p : j["policy_pool"]) cfg.gen.policy_pool.push_back(policy_from_name(p));
  }
}

int cmd_generate(const std::string& out_path, int count, int nodes_lo, int nodes_hi,
                 const std::string& topology, const std::string& topology_dir,
                 const std::vector<std::string>& traffic, double ti_lo, double ti_hi,
                 uint64_t seed) {
  datagen::GenerationSpec spec;
  spec.n_nodes_lo = nodes_lo;
  spec.n_nodes_hi = nodes_hi;
  spec.ti_lo = ti_lo;
  spec.ti_hi = ti_hi;
  if (!traffic.empty() && !(traffic.size() == 1 && traffic[0] == "mixed")) {
    spec.traffic_pool.clear();
    for (const auto& name : traffic) spec.traffic_pool.push_back(traffic::model_from_name(name));
  }
  spec.validate();

  std::vector<SampleRecord> records;
  for (int k = 0; k < count; ++k) {
    TopologySpec topo;
    if (topology == "plod") {
      Rng pick(derive_seed(seed, 2 * (uint64_t)k));
      int n = spec.n_nodes_lo +
              (int)pick.uniform_index((uint64_t)(spec.n_nodes_hi - spec.n_nodes_lo + 1));
      double alpha = pick.uniform(spec.alpha_lo, spec.alpha_hi);
      double beta = pick.uniform(spec.beta_lo, spec.beta_hi);
      topo = datagen::generate_topology(n, alpha, beta, pick.raw(), spec);
    } else {
      std::string path = topology;
      if (!std::filesystem::exists(path))
        path = topology_dir + "/" + topology + ".json";
      topo = datagen::load_topology_file(path, spec, derive_seed(seed, 2 * (uint64_t)k));
    }
    NetworkSample s = datagen::randomize_sample(topo, spec, derive_seed(seed, 2 * (uint64_t)k + 1));
    char id[32];
    std::snprintf(id, sizeof id, "s%05d", k);
    records.push_back(SampleRecord::from_sample(s, id));
  }
  write_dataset(out_path, records);
  std::fprintf(stderr, "wrote %d samples to %s\n", count, out_path.c_str());
  return 0;
}

int cmd_simulate(const std::string& in_path, std::string out_path, double duration,
                 double warmup, uint64_t seed, int workers) {
  if (out_path.empty()) out_path = in_path;
  auto records = read_dataset(in_path);
  auto samples = build_all(records);
  std::vector<sim::SimulationResult> results(samples.size());
  eval::parallel_for((int)samples.size(), workers, [&](int i) {
    results[i] = sim::simulate(samples[i], {duration, warmup, derive_seed(seed, (uint64_t)i)});
  });
  for (size_t i = 0; i < records.size(); ++i) {
    records[i].labels = metrics_by_flow(samples[i], results[i].flow_metrics);
    std::map<std::string, QueueStatsRecord> qs;
    for (int qi = 0; qi < samples[i].num_queues(); ++qi) {
      const auto& st = results[i].queue_stats[qi];
      qs[samples[i].queue_spec(qi).id] =
          QueueStatsRecord{st.mean_occupancy_bits, st.loss_fraction, st.mean_packet_size};
    }
    records[i].queue_stats = std::move(qs);
  }
  write_dataset(out_path, records);
  std::fprintf(stderr, "labeled %zu samples -> %s\n", records.size(), out_path.c_str());
  return 0;
}

int cmd_train(const std::string& dataset, const std::string& out_path, const std::string& target,
              int epochs, int spe, double lr, double val_frac, uint64_t seed, int hidden,
              int iterations, bool ablate_load, bool ablate_occupancy, bool verbose) {
  auto records = read_dataset(dataset);
  std::vector<NetworkSample> samples;
  for (const auto& rec : records) {
    if (!rec.labels) fail(Errc::UnlabeledSample, "record '" + rec.sample_id + "' has no labels");
    samples.push_back(rec.build());
  }

  model::TrainOptions opts;
  opts.config.hidden_dim = hidden;
  opts.config.iterations = iterations;
  opts.config.ablate_load = ablate_load;
  opts.config.ablate_occupancy = ablate_occupancy;
  opts.target = model::target_from_name(target);
  opts.epochs = epochs;
  opts.samples_per_epoch = spe;
  opts.learning_rate = lr;
  opts.validation_fraction = val_frac;
  opts.seed = seed;
  opts.verbose = verbose;

  auto res = model::train(samples, opts);
  if (res.diverged)
    std::fprintf(stderr, "warning: training diverged; checkpoint holds the last good state\n");

  json manifest;
  manifest["model"] = res.config.to_json();
  manifest["target"] = target;
  manifest["provenance"] = json{{"dataset", dataset},
                                {"n_samples", samples.size()},
                                {"epochs", epochs},
                                {"samples_per_epoch", spe},
                                {"learning_rate", lr},
                                {"validation_fraction", val_frac},
                                {"seed", seed},
                                {"best_epoch", res.best_epoch},
                                {"best_val_loss", res.best_val_loss},
                                {"diverged", res.diverged}};
  diff::save_checkpoint(out_path, res.params, manifest);

  json history = json::array();
  for (const auto& e : res.history)
    history.push_back(json{{"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  std::ofstream hf(out_path + ".history.json");
  hf << history.dump(2) << '\n';
  std::fprintf(stderr, "checkpoint -> %s (best epoch %d, val %.6f)\n", out_path.c_str(),
               res.best_epoch, res.best_val_loss);
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& in_path,
                const std::string& out_path) {
  auto ck = diff::load_checkpoint(checkpoint);
  model::ModelConfig config = model::ModelConfig::from_json(ck.manifest.at("model"));
  auto records = read_dataset(in_path);
  auto samples = build_all(records);

  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    auto t0 = Clock::now();
    auto out = model::predict(ck.params, config, samples[i]);
    auto t1 = Clock::now();
    double dt = std::chrono::duration<double>(t1 - t0).count();
    total += dt;
    records[i].predictions["gnn"] = metrics_by_flow(samples[i], out.metrics);
    std::string note;
    if (out.occupancy_flags > 0)
      note = " (" + std::to_string(out.occupancy_flags) + " hops above port buffer)";
    std::fprintf(stderr, "sample %s: %d nodes, %d flows, %.1f ms%s\n",
                 records[i].sample_id.c_str(), samples[i].num_nodes(), samples[i].num_flows(),
                 dt * 1e3, note.c_str());
  }
  write_dataset(out_path, records);
  std::fprintf(stderr, "inference on %zu samples in %.1f ms total -> %s\n", samples.size(),
               total * 1e3, out_path.c_str());
  return 0;
}

int cmd_qt(const std::string& in_path, std::string out_path, int workers) {
  if (out_path.empty()) out_path = in_path;
  auto records = read_dataset(in_path);
  auto samples = build_all(records);
  std::vector<std::vector<FlowMetrics>> preds(samples.size());
  auto t0 = Clock::now();
  eval::parallel_for((int)samples.size(), workers,
                     [&](int i) { preds[i] = qt::qt_predict(samples[i]); });
  auto t1 = Clock::now();
  for (size_t i = 0; i < records.size(); ++i)
    records[i].predictions["qt"] = metrics_by_flow(samples[i], preds[i]);
  write_dataset(out_path, records);
  std::fprintf(stderr, "qt baseline on %zu samples in %.1f ms -> %s\n", records.size(),
               std::chrono::duration<double>(t1 - t0).count() * 1e3, out_path.c_str());
  return 0;
}

int cmd_evaluate(const std::string& in_path, const std::string& predictor,
                 const std::string& json_out) {
  auto records = read_dataset(in_path);
  std::vector<double> truth_d, truth_j, truth_l, pred_d, pred_j, pred_l;
  for (const auto& rec : records) {
    if (!rec.labels) fail(Errc::UnlabeledSample, "record '" + rec.sample_id + "' has no labels");
    auto pit = rec.predictions.find(predictor);
    if (pit == rec.predictions.end())
      fail(Errc::MissingArtifact,
           "record '" + rec.sample_id + "' has no '" + predictor + "' predictions");
    for (const auto& [flow, truth] : *rec.labels) {
      auto fit = pit->second.find(flow);
      if (fit == pit->second.end())
        fail(Errc::MissingArtifact, "missing prediction for flow '" + flow + "'");
      truth_d.push_back(truth.mean_delay);
      truth_j.push_back(truth.jitter);
      truth_l.push_back(truth.loss_ratio);
      pred_d.push_back(fit->second.mean_delay);
      pred_j.push_back(fit->second.jitter);
      pred_l.push_back(fit->second.loss_ratio);
    }
  }

  json out = json::object();
  auto report = [&](const char* name, const std::vector<double>& p,
                    const std::vector<double>& t) {
    auto m = eval::compute_metrics(p, t);
    std::printf("%-7s mape %8.4f  mse %10.6g  mae %10.6g  r2 %7.4f  w1 %8.5f  n %lld\n", name,
                m.mape, m.mse, m.mae, m.r2, m.w1, (long long)m.n);
    out[name] = json{{"mape", m.mape}, {"mse", m.mse}, {"mae", m.mae},
                     {"r2", m.r2},     {"w1", m.w1},   {"n", m.n}};
  };
  std::printf("predictor: %s (%zu samples)\n", predictor.c_str(), records.size());
  report("delay", pred_d, truth_d);
  report("jitter", pred_j, truth_j);
  report("loss", pred_l, truth_l);
  if (!json_out.empty()) {
    std::ofstream jf(json_out);
    jf << out.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow-level network performance modeling toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  int workers = 1;
  std::string config_path;
  app.add_option("--seed", seed, "base random seed")->capture_default_str();
  app.add_option("--workers", workers, "worker threads for simulation/prediction")
      ->capture_default_str();
  app.add_option("--config", config_path, "JSON overrides (experiment runs)");

  // generate
  auto* gen = app.add_subcommand("generate", "produce an unlabeled dataset");
  std::string gen_out, gen_topology = "plod", gen_topology_dir = "data/topologies";
  int gen_count = 10, gen_nodes_lo = 5, gen_nodes_hi = 8;
  double gen_ti_lo = 400.0, gen_ti_hi = 2000.0;
  std::vector<std::string> gen_traffic;
  gen->add_option("--out", gen_out, "output dataset file")->required();
  gen->add_option("--count", gen_count, "number of samples")->capture_default_str();
  gen->add_option("--nodes-lo", gen_nodes_lo)->capture_default_str();
  gen->add_option("--nodes-hi", gen_nodes_hi)->capture_default_str();
  gen->add_option("--topology", gen_topology,
                  "plod, a bundled name (nsfnet/geant/gbn) or a topology file")
      ->capture_default_str();
  gen->add_option("--topology-dir", gen_topology_dir)->capture_default_str();
  gen->add_option("--traffic", gen_traffic,
                  "traffic model pool (default: all five models mixed)");
  gen->add_option("--ti-lo", gen_ti_lo)->capture_default_str();
  gen->add_option("--ti-hi", gen_ti_hi)->capture_default_str();

  // simulate
  auto* simc = app.add_subcommand("simulate", "label a dataset with simulator ground truth");
  std::string sim_in, sim_out;
  double sim_duration = 8000.0, sim_warmup = 800.0;
  simc->add_option("--in", sim_in)->required();
  simc->add_option("--out", sim_out, "output file (default: in place)");
  simc->add_option("--duration", sim_duration)->capture_default_str();
  simc->add_option("--warmup", sim_warmup)->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "train the message-passing model");
  std::string tr_dataset, tr_out = "model.ckpt", tr_target = "delay";
  int tr_epochs = 50, tr_spe = 200, tr_hidden = 32, tr_iter = 8;
  double tr_lr = 1e-3, tr_val = 0.1;
  bool tr_ablate_load = false, tr_ablate_occ = false, tr_verbose = false;
  tr->add_option("--dataset", tr_dataset)->required();
  tr->add_option("--out", tr_out, "checkpoint path")->capture_default_str();
  tr->add_option("--target", tr_target, "delay | jitter | loss")->capture_default_str();
  tr->add_option("--epochs", tr_epochs)->capture_default_str();
  tr->add_option("--samples-per-epoch", tr_spe)->capture_default_str();
  tr->add_option("--lr", tr_lr)->capture_default_str();
  tr->add_option("--val-frac", tr_val)->capture_default_str();
  tr->add_option("--hidden", tr_hidden)->capture_default_str();
  tr->add_option("--iterations", tr_iter)->capture_default_str();
  tr->add_flag("--ablate-load", tr_ablate_load, "feed raw capacity instead of load");
  tr->add_flag("--ablate-occupancy", tr_ablate_occ, "predict delay directly from flow state");
  tr->add_flag("--verbose", tr_verbose, "per-epoch progress on stderr");

  // predict
  auto* pr = app.add_subcommand("predict", "run inference with a trained checkpoint");
  std::string pr_ckpt, pr_in, pr_out;
  pr->add_option("--checkpoint", pr_ckpt)->required();
  pr->add_option("--input", pr_in)->required();
  pr->add_option("--output", pr_out)->required();

  // qt-baseline
  auto* qt = app.add_subcommand("qt-baseline", "analytic per-queue baseline predictions");
  std::string qt_in, qt_out;
  qt->add_option("--in", qt_in)->required();
  qt->add_option("--out", qt_out, "output file (default: in place)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score stored predictions against labels");
  std::string ev_in, ev_pred = "gnn", ev_json;
  ev->add_option("--in", ev_in)->required();
  ev->add_option("--predictor", ev_pred, "which prediction set to score")->capture_default_str();
  ev->add_option("--json", ev_json, "also write the report as JSON");

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a full study and write report files");
  eval::ExperimentConfig excfg;
  ex->add_option("--kind", excfg.kind,
                 "traffic-table | scheduling-table | scale-sweep | fewshot-sweep | ablation")
      ->required();
  ex->add_option("--out-dir", excfg.out_dir)->capture_default_str();
  ex->add_option("--n-train", excfg.n_train)->capture_default_str();
  ex->add_option("--n-test", excfg.n_test)->capture_default_str();
  ex->add_option("--epochs", excfg.epochs)->capture_default_str();
  ex->add_option("--samples-per-epoch", excfg.samples_per_epoch)->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate(gen_out, gen_count, gen_nodes_lo, gen_nodes_hi, gen_topology,
                          gen_topology_dir, gen_traffic, gen_ti_lo, gen_ti_hi, seed);
    if (simc->parsed()) return cmd_simulate(sim_in, sim_out, sim_duration, sim_warmup, seed, workers);
    if (tr->parsed())
      return cmd_train(tr_dataset, tr_out, tr_target, tr_epochs, tr_spe, tr_lr, tr_val, seed,
                       tr_hidden, tr_iter, tr_ablate_load, tr_ablate_occ, tr_verbose);
    if (pr->parsed()) return cmd_predict(pr_ckpt, pr_in, pr_out);
    if (qt->parsed()) return cmd_qt(qt_in, qt_out, workers);
    if (ev->parsed()) return cmd_evaluate(ev_in, ev_pred, ev_json);
    if (ex->parsed()) {
      excfg.seed = seed;
      excfg.workers = workers;
      if (!config_path.empty()) apply_config_file(excfg, config_path);
      eval::run_experiment(excfg);
      std::fprintf(stderr, "experiment '%s' -> %s\n", excfg.kind.c_str(), excfg.out_dir.c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Errc::MissingArtifact ? kExitMissing : kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return 0;
}
