#include "netmod/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "netmod/sim/scheduler.hpp"
#include "netmod/traffic/generator.hpp"

namespace netmod::sim {

namespace {

enum class EventKind : uint8_t { ServiceCompletion = 0, SourceArrival = 1 };

struct Event {
  double t;
  EventKind kind;
  uint64_t seq;
  int index;  // flow for SourceArrival, link for ServiceCompletion

  // completions precede arrivals at equal timestamps, then insertion order
  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

struct FlowRt {
  traffic::Generator gen;
  double pending_size = 0.0;
  // Welford accumulators over delivered-packet delays
  uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  uint64_t sent = 0, delivered = 0, dropped = 0;

  explicit FlowRt(traffic::Generator g) : gen(std::move(g)) {}
};

struct LinkRt {
  double capacity = 0.0;
  std::vector<int> queues;  // global queue indices, priority order
  std::vector<QueueState*> qptr;
  PortScheduler sched;
  bool busy = false;
  int serving = -1;  // local queue position being served
};

}  // namespace

SimulationResult simulate(const NetworkSample& sample, const SimOptions& opts) {
  if (sample.num_flows() == 0) fail(Errc::ZeroTraffic, "sample has no flows");
  if (!(opts.duration > opts.warmup) || opts.warmup < 0)
    fail(Errc::InvalidRate, "need duration > warmup >= 0");

  // a packet-count projection guards the statistics counters and the event
  // heap against absurd configurations
  double projected = 0.0;
  for (int fi = 0; fi < sample.num_flows(); ++fi)
    projected += sample.flow(fi).traffic.packet_rate() * opts.duration;
  if (!(projected < 1e12)) fail(Errc::NumericOverflow, "configuration implies > 1e12 packets");

  // runtime state
  std::vector<QueueState> queues(sample.num_queues());
  for (int qi = 0; qi < sample.num_queues(); ++qi) {
    const auto& ref = sample.queue(qi);
    queues[qi].buffer_bits = ref.buffer_bits;
    queues[qi].packet_cap = ref.packet_cap.value_or(0);
    queues[qi].weight = ref.weight;
  }

  std::vector<LinkRt> links(sample.num_links());
  for (int li = 0; li < sample.num_links(); ++li) {
    LinkRt& l = links[li];
    const LinkSpec& spec = sample.link(li);
    l.capacity = spec.capacity;
    l.queues = sample.queues_of_link(li);
    std::vector<double> weights;
    double max_pkt = 0.0;
    for (int qi : l.queues) {
      l.qptr.push_back(&queues[qi]);
      weights.push_back(queues[qi].weight > 0 ? queues[qi].weight : 1.0);
      for (int fi : sample.flows_through_queue(qi))
        max_pkt = std::max(max_pkt, sample.flow(fi).traffic.packet_size.size_bound());
    }
    if (max_pkt <= 0) max_pkt = 1000.0;
    l.sched = PortScheduler(spec.port.policy, std::move(weights), max_pkt);
  }

  std::vector<FlowRt> flows;
  flows.reserve(sample.num_flows());
  for (int fi = 0; fi < sample.num_flows(); ++fi)
    flows.emplace_back(traffic::Generator(sample.flow(fi).traffic, derive_seed(opts.seed, fi)));

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> heap;
  uint64_t seq = 0;
  uint64_t event_count = 0;
  bool measuring = opts.warmup == 0.0;

  auto integrate = [&](QueueState& q, double now) {
    if (measuring) q.occupancy_integral += q.occupied_bits * (now - q.last_change);
    q.last_change = now;
  };

  auto start_service = [&](int li, double now) {
    LinkRt& l = links[li];
    int pos = l.sched.select_next(l.qptr);
    l.busy = true;
    l.serving = pos;
    double size = l.qptr[pos]->packets.front().size;
    heap.push(Event{now + size / l.capacity, EventKind::ServiceCompletion, seq++, li});
  };

  // arrival of a packet at hop `hop` of its flow; returns false on drop
  auto arrive_at_hop = [&](int fi, int hop, double size, double origin, double now) {
    const auto& path = sample.flow_path(fi);
    auto [qi, li] = path[hop];
    QueueState& q = queues[qi];
    FlowRt& f = flows[fi];
    bool counted = origin >= opts.warmup;
    if (!q.fits(size)) {
      if (counted) {
        ++f.dropped;
        if (measuring) ++q.dropped;
      }
      return;
    }
    integrate(q, now);
    QueuedPacket pkt{size, origin, fi, hop, 0.0};
    LinkRt& l = links[li];
    int pos = sample.queue(qi).position;
    q.packets.push_back(pkt);
    l.sched.on_enqueue(l.qptr, pos, q.packets.back(), now);
    q.occupied_bits += size;
    if (measuring) {
      ++q.enqueued;
      q.enqueued_bits += size;
    }
    if (!l.busy) start_service(li, now);
  };

  // prime the sources
  for (int fi = 0; fi < sample.num_flows(); ++fi) {
    auto a = flows[fi].gen.next();
    flows[fi].pending_size = a.size;
    heap.push(Event{a.gap, EventKind::SourceArrival, seq++, fi});
  }

  while (!heap.empty()) {
    Event ev = heap.top();
    if (ev.t > opts.duration) break;
    heap.pop();
    ++event_count;

    if (!measuring && ev.t >= opts.warmup) {
      // measurement window opens: reset counters, integrate occupancy from here
      measuring = true;
      for (auto& q : queues) {
        q.occupancy_integral = 0.0;
        q.last_change = opts.warmup;
        q.enqueued = q.dropped = 0;
        q.enqueued_bits = 0.0;
      }
    }

    if (ev.kind == EventKind::SourceArrival) {
      int fi = ev.index;
      FlowRt& f = flows[fi];
      if (ev.t >= opts.warmup) ++f.sent;
      arrive_at_hop(fi, 0, f.pending_size, ev.t, ev.t);
      auto a = f.gen.next();
      f.pending_size = a.size;
      heap.push(Event{ev.t + a.gap, EventKind::SourceArrival, seq++, fi});
    } else {
      int li = ev.index;
      LinkRt& l = links[li];
      QueueState& q = *l.qptr[l.serving];
      integrate(q, ev.t);
      QueuedPacket pkt = q.packets.front();
      q.packets.pop_front();
      q.occupied_bits -= pkt.size;
      if (q.packets.empty()) q.occupied_bits = 0.0;  // cancel float drift at idle
      l.sched.on_dequeue(l.qptr, l.serving);
      l.busy = false;
      l.serving = -1;

      const auto& path = sample.flow_path(pkt.flow);
      if (pkt.hop + 1 == (int)path.size()) {
        if (pkt.origin >= opts.warmup) {
          FlowRt& f = flows[pkt.flow];
          ++f.delivered;
          double delay = ev.t - pkt.origin;
          ++f.n;
          double d1 = delay - f.mean;
          f.mean += d1 / f.n;
          f.m2 += d1 * (delay - f.mean);
        }
      } else {
        arrive_at_hop(pkt.flow, pkt.hop + 1, pkt.size, pkt.origin, ev.t);
      }

      bool any = false;
      for (auto* qs : l.qptr) any |= !qs->packets.empty();
      if (any) start_service(li, ev.t);
    }
  }

  // close occupancy integrals at the horizon
  for (auto& q : queues)
    if (measuring) q.occupancy_integral += q.occupied_bits * (opts.duration - q.last_change);

  SimulationResult res;
  res.event_count = event_count;
  res.duration = opts.duration;
  res.warmup = opts.warmup;
  res.flow_metrics.resize(sample.num_flows());
  res.sent.resize(sample.num_flows());
  res.delivered.resize(sample.num_flows());
  res.dropped.resize(sample.num_flows());
  for (int fi = 0; fi < sample.num_flows(); ++fi) {
    FlowRt& f = flows[fi];
    FlowMetrics& m = res.flow_metrics[fi];
    if (f.n > 0) {
      m.mean_delay = f.mean;
      double var = f.n > 1 ? f.m2 / (double)(f.n - 1) : 0.0;
      m.jitter = var / f.mean;
    } else {
      // no delivered packet in the window: report the transmission floor
      double floor = 0.0;
      for (auto [qi, li] : sample.flow_path(fi))
        floor += sample.flow(fi).avg_packet_size / sample.link(li).capacity;
      m.mean_delay = floor;
      m.jitter = 0.0;
    }
    m.loss_ratio = f.sent > 0 ? (double)f.dropped / (double)f.sent : 0.0;
    res.sent[fi] = f.sent;
    res.delivered[fi] = f.delivered;
    res.dropped[fi] = f.dropped;
  }
  res.queue_stats.resize(sample.num_queues());
  double window = opts.duration - opts.warmup;
  for (int qi = 0; qi < sample.num_queues(); ++qi) {
    QueueState& q = queues[qi];
    QueueStats& st = res.queue_stats[qi];
    st.mean_occupancy_bits = q.occupancy_integral / window;
    uint64_t attempts = q.enqueued + q.dropped;
    st.loss_fraction = attempts > 0 ? (double)q.dropped / (double)attempts : 0.0;
    st.mean_packet_size = q.enqueued > 0 ? q.enqueued_bits / (double)q.enqueued : 0.0;
    st.enqueued = q.enqueued;
    st.dropped = q.dropped;
  }
  return res;
}

}  // namespace netmod::sim
