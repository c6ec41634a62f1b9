#include "netmod/core/io.hpp"

#include <fstream>

#include <json.hpp>

#include "netmod/core/error.hpp"

namespace netmod {

using json = nlohmann::ordered_json;

namespace {

json metrics_to_json(const FlowMetrics& m) {
  return json{{"mean_delay", m.mean_delay}, {"jitter", m.jitter}, {"loss_ratio", m.loss_ratio}};
}

FlowMetrics metrics_from_json(const json& j) {
  FlowMetrics m;
  m.mean_delay = j.at("mean_delay").get<double>();
  m.jitter = j.at("jitter").get<double>();
  m.loss_ratio = j.at("loss_ratio").get<double>();
  return m;
}

json packet_size_to_json(const traffic::PacketSizeDist& d) {
  using Kind = traffic::PacketSizeDist::Kind;
  json j;
  switch (d.kind) {
    case Kind::Constant: j["kind"] = "constant"; break;
    case Kind::ThreePoint: j["kind"] = "three_point"; break;
    case Kind::Exponential: j["kind"] = "exponential"; break;
  }
  j["mean"] = d.mean;
  if (d.kind == Kind::ThreePoint) {
    j["sizes"] = d.sizes;
    j["probs"] = d.probs;
  }
  return j;
}

traffic::PacketSizeDist packet_size_from_json(const json& j) {
  traffic::PacketSizeDist d;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    d = traffic::PacketSizeDist::constant(j.at("mean").get<double>());
  } else if (kind == "three_point") {
    d = traffic::PacketSizeDist::three_point(j.at("sizes").get<std::array<double, 3>>(),
                                             j.at("probs").get<std::array<double, 3>>());
  } else if (kind == "exponential") {
    d = traffic::PacketSizeDist::exponential(j.at("mean").get<double>());
  } else {
    fail(Errc::ParseError, "unknown packet size kind '" + kind + "'");
  }
  return d;
}

json traffic_to_json(const traffic::Descriptor& t) {
  json params = json::object();
  switch (t.model) {
    case traffic::Model::OnOff:
      params["t_on"] = t.t_on;
      params["t_off"] = t.t_off;
      break;
    case traffic::Model::AutocorrelatedExp: params["rho_a"] = t.rho_a; break;
    case traffic::Model::ModulatedExp:
      params["alpha"] = t.alpha;
      params["beta"] = t.beta;
      break;
    default: break;
  }
  if (t.noise_eps != 0.0) params["noise_eps"] = t.noise_eps;
  return json{{"model", traffic::model_name(t.model)},
              {"params", params},
              {"packet_size", packet_size_to_json(t.packet_size)}};
}

traffic::Descriptor traffic_from_json(const json& j, double lambda) {
  traffic::Descriptor t;
  t.model = traffic::model_from_name(j.at("model").get<std::string>());
  t.lambda = lambda;
  const json& p = j.at("params");
  t.t_on = p.value("t_on", 0.0);
  t.t_off = p.value("t_off", 0.0);
  t.rho_a = p.value("rho_a", 0.0);
  t.alpha = p.value("alpha", 0.0);
  t.beta = p.value("beta", 0.0);
  t.noise_eps = p.value("noise_eps", 0.0);
  t.packet_size = packet_size_from_json(j.at("packet_size"));
  return t;
}

}  // namespace

NetworkSample SampleRecord::build() const {
  std::optional<std::vector<FlowMetrics>> label_vec;
  if (labels) {
    label_vec.emplace();
    label_vec->reserve(flows.size());
    for (const FlowSpec& f : flows) {
      auto it = labels->find(f.id);
      if (it == labels->end())
        fail(Errc::UnknownReference, "labels missing flow '" + f.id + "'");
      label_vec->push_back(it->second);
    }
  }
  return NetworkSample::build(topology, flows, traffic_intensity, std::move(label_vec));
}

SampleRecord SampleRecord::from_sample(const NetworkSample& s, std::string sample_id) {
  SampleRecord rec;
  rec.sample_id = std::move(sample_id);
  rec.traffic_intensity = s.traffic_intensity();
  rec.topology = s.topology();
  rec.flows = s.flows();
  if (s.labels()) {
    rec.labels.emplace();
    for (int fi = 0; fi < s.num_flows(); ++fi)
      (*rec.labels)[s.flow(fi).id] = (*s.labels())[fi];
  }
  return rec;
}

std::string write_record(const SampleRecord& rec) {
  json j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["sample_id"] = rec.sample_id;
  j["traffic_intensity"] = rec.traffic_intensity;

  json nodes = json::array();
  for (const auto& n : rec.topology.nodes) nodes.push_back(n);
  json links = json::array();
  for (const LinkSpec& l : rec.topology.links) {
    json queues = json::array();
    for (const QueueSpec& q : l.port.queues) {
      json qj{{"id", q.id}, {"buffer_size", q.buffer_bits}, {"priority_index", q.priority}};
      if (q.weight != 0.0) qj["weight"] = q.weight;
      if (q.packet_cap) qj["packet_cap"] = *q.packet_cap;
      queues.push_back(qj);
    }
    links.push_back(json{{"id", l.id},
                         {"src", l.src},
                         {"dst", l.dst},
                         {"capacity", l.capacity},
                         {"port", json{{"policy", policy_name(l.port.policy)}, {"queues", queues}}}});
  }
  j["topology"] = json{{"nodes", nodes}, {"links", links}};

  json flows = json::array();
  for (const FlowSpec& f : rec.flows) {
    json path = json::array();
    for (const auto& [q, l] : f.path) path.push_back(json::array({q, l}));
    flows.push_back(json{{"id", f.id},
                         {"lambda", f.lambda},
                         {"avg_packet_size", f.avg_packet_size},
                         {"tos_class", f.tos_class},
                         {"path", path},
                         {"traffic", traffic_to_json(f.traffic)}});
  }
  j["flows"] = flows;

  if (rec.labels) {
    json labels = json::object();
    for (const auto& [id, m] : *rec.labels) labels[id] = metrics_to_json(m);
    j["labels"] = labels;
  }
  if (!rec.predictions.empty()) {
    json preds = json::object();
    for (const auto& [name, by_flow] : rec.predictions) {
      json p = json::object();
      for (const auto& [id, m] : by_flow) p[id] = metrics_to_json(m);
      preds[name] = p;
    }
    j["predictions"] = preds;
  }
  if (rec.queue_stats) {
    json qs = json::object();
    for (const auto& [id, st] : *rec.queue_stats)
      qs[id] = json{{"mean_occupancy_bits", st.mean_occupancy_bits},
                    {"loss_fraction", st.loss_fraction},
                    {"mean_packet_size", st.mean_packet_size}};
    j["queue_stats"] = qs;
  }
  return j.dump();
}

SampleRecord parse_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, std::string("bad dataset record: ") + e.what());
  }
  try {
    int version = j.at("schema_version").get<int>();
    if (version != kDatasetSchemaVersion)
      fail(Errc::ParseError, "unsupported schema_version " + std::to_string(version));

    SampleRecord rec;
    rec.sample_id = j.value("sample_id", "");
    rec.traffic_intensity = j.at("traffic_intensity").get<double>();

    const json& topo = j.at("topology");
    for (const auto& n : topo.at("nodes")) rec.topology.nodes.push_back(n.get<std::string>());
    for (const auto& lj : topo.at("links")) {
      LinkSpec l;
      l.id = lj.at("id").get<std::string>();
      l.src = lj.at("src").get<std::string>();
      l.dst = lj.at("dst").get<std::string>();
      l.capacity = lj.at("capacity").get<double>();
      const json& port = lj.at("port");
      l.port.policy = policy_from_name(port.at("policy").get<std::string>());
      for (const auto& qj : port.at("queues")) {
        QueueSpec q;
        q.id = qj.at("id").get<std::string>();
        q.buffer_bits = qj.at("buffer_size").get<double>();
        q.priority = qj.at("priority_index").get<int>();
        q.weight = qj.value("weight", 0.0);
        if (qj.contains("packet_cap")) q.packet_cap = qj.at("packet_cap").get<int>();
        l.port.queues.push_back(q);
      }
      rec.topology.links.push_back(std::move(l));
    }

    for (const auto& fj : j.at("flows")) {
      FlowSpec f;
      f.id = fj.at("id").get<std::string>();
      f.lambda = fj.at("lambda").get<double>();
      f.avg_packet_size = fj.at("avg_packet_size").get<double>();
      f.tos_class = fj.at("tos_class").get<int>();
      for (const auto& hop : fj.at("path"))
        f.path.emplace_back(hop.at(0).get<std::string>(), hop.at(1).get<std::string>());
      f.traffic = traffic_from_json(fj.at("traffic"), f.lambda);
      rec.flows.push_back(std::move(f));
    }

    if (j.contains("labels")) {
      rec.labels.emplace();
      for (const auto& [id, mj] : j.at("labels").items())
        (*rec.labels)[id] = metrics_from_json(mj);
    }
    if (j.contains("predictions")) {
      for (const auto& [name, pj] : j.at("predictions").items())
        for (const auto& [id, mj] : pj.items()) rec.predictions[name][id] = metrics_from_json(mj);
    }
    if (j.contains("queue_stats")) {
      rec.queue_stats.emplace();
      for (const auto& [id, sj] : j.at("queue_stats").items()) {
        QueueStatsRecord st;
        st.mean_occupancy_bits = sj.at("mean_occupancy_bits").get<double>();
        st.loss_fraction = sj.at("loss_fraction").get<double>();
        st.mean_packet_size = sj.at("mean_packet_size").get<double>();
        (*rec.queue_stats)[id] = st;
      }
    }
    return rec;
  } catch (const json::exception& e) {
    fail(Errc::ParseError, std::string("bad dataset record: ") + e.what());
  }
}

void write_dataset(const std::string& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(Errc::MissingArtifact, "cannot open '" + path + "' for writing");
  for (const auto& rec : records) out << write_record(rec) << '\n';
}

std::vector<SampleRecord> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingArtifact, "cannot open dataset '" + path + "'");
  std::vector<SampleRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(parse_record(line));
  }
  return records;
}

}  // namespace netmod
