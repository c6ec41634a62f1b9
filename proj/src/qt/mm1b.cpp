#include "netmod/qt/mm1b.hpp"

#include <algorithm>
#include <cmath>

#include "netmod/core/error.hpp"

namespace netmod::qt {

Mm1bSolution mm1b_solve(double lambda, double mu, int b) {
  if (!(mu > 0)) fail(Errc::InvalidRate, "service rate must be > 0");
  if (lambda < 0) fail(Errc::InvalidRate, "arrival rate must be >= 0");
  if (b < 1) fail(Errc::InvalidRate, "buffer must hold at least one customer");

  Mm1bSolution s;
  s.b = b;
  s.rho = lambda / mu;
  s.state_probs.resize(b + 1);

  if (lambda == 0.0) {
    s.state_probs[0] = 1.0;
    s.mean_delay = 1.0 / mu;  // an arriving probe would only see its own service
    return s;
  }

  // geometric weights normalized in place; near rho = 1 the closed form
  // degenerates to the uniform distribution, and for rho > 1 the recursion
  // runs downward from the full state so weights never overflow
  if (std::abs(s.rho - 1.0) < 1e-12) {
    std::fill(s.state_probs.begin(), s.state_probs.end(), 1.0 / (b + 1));
  } else if (s.rho < 1.0) {
    double w = 1.0, total = 0.0;
    for (int n = 0; n <= b; ++n) {
      s.state_probs[n] = w;
      total += w;
      w *= s.rho;
    }
    for (double& p : s.state_probs) p /= total;
  } else {
    double w = 1.0, total = 0.0;
    for (int n = b; n >= 0; --n) {
      s.state_probs[n] = w;
      total += w;
      w /= s.rho;
    }
    for (double& p : s.state_probs) p /= total;
  }
  s.blocking = s.state_probs[b];

  for (int n = 0; n <= b; ++n) s.mean_occupancy += n * s.state_probs[n];

  // Little's law on the accepted rate gives the mean sojourn; the variance
  // follows from the Erlang mixture an accepted arrival experiences (it
  // finds n in system, n < b, and waits n+1 exponential services).
  double accepted = lambda * (1.0 - s.blocking);
  s.mean_delay = s.mean_occupancy / accepted;
  double e2 = 0.0;
  for (int n = 0; n < b; ++n) {
    double q = s.state_probs[n] / (1.0 - s.blocking);
    double k = n + 1;
    e2 += q * (k + k * k) / (mu * mu);  // E[T^2 | n] of Erlang(k, mu)
  }
  s.delay_variance = e2 - s.mean_delay * s.mean_delay;
  if (s.delay_variance < 0) s.delay_variance = 0;
  return s;
}

namespace {

struct QueueModel {
  double mean_pkt = 0.0;     // packet-weighted mean size of traversing flows
  int b = 1;                 // buffer in packets
  double arrival_pkts = 0.0; // thinned packet arrival rate
  double service_rate = 0.0; // packets per time unit
  double blocking = 0.0;
  double wait = 0.0;         // queuing delay (sojourn minus service)
  double sojourn_var = 0.0;
  bool active = false;
};

}  // namespace

std::vector<FlowMetrics> qt_predict(const NetworkSample& sample) {
  const int nq = sample.num_queues();
  std::vector<QueueModel> qm(nq);

  for (int qi = 0; qi < nq; ++qi) {
    const auto& flows = sample.flows_through_queue(qi);
    if (flows.empty()) continue;
    QueueModel& m = qm[qi];
    m.active = true;
    double bits = 0.0, pkts = 0.0;
    for (int fi : flows) {
      const FlowSpec& f = sample.flow(fi);
      bits += f.lambda;
      pkts += f.lambda / f.avg_packet_size;
    }
    m.mean_pkt = bits / pkts;
    const auto& ref = sample.queue(qi);
    m.b = ref.packet_cap
              ? *ref.packet_cap
              : std::max(1, (int)std::floor(ref.buffer_bits / m.mean_pkt));
  }

  // fixed point: queue arrival rates are thinned by upstream blocking along
  // each flow's own path; service shares of SP queues depend on the offered
  // bits of higher priorities, so they are refreshed each sweep as well
  const int kMaxIter = 1000;
  const double kTol = 1e-9;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    std::vector<double> arrival(nq, 0.0);
    std::vector<double> offered_bits(nq, 0.0);
    for (int fi = 0; fi < sample.num_flows(); ++fi) {
      const FlowSpec& f = sample.flow(fi);
      double pkt_rate = f.lambda / f.avg_packet_size;
      double through = 1.0;
      for (auto [qi, li] : sample.flow_path(fi)) {
        arrival[qi] += pkt_rate * through;
        offered_bits[qi] += f.lambda * through;
        through *= 1.0 - qm[qi].blocking;
      }
    }

    double delta = 0.0;
    for (int qi = 0; qi < nq; ++qi) {
      QueueModel& m = qm[qi];
      if (!m.active) continue;
      const auto& ref = sample.queue(qi);
      const LinkSpec& link = sample.link(ref.link);
      double capacity = link.capacity;
      double share_bits = capacity;
      switch (link.port.policy) {
        case SchedPolicy::Fifo: break;
        case SchedPolicy::StrictPriority: {
          // residual capacity after higher-priority offered traffic
          double higher = 0.0;
          for (int q2 : sample.queues_of_link(ref.link)) {
            if (sample.queue(q2).position < ref.position) higher += offered_bits[q2];
          }
          share_bits = std::max(capacity - higher, capacity * 1e-6);
          break;
        }
        case SchedPolicy::Wfq:
        case SchedPolicy::Drr: share_bits = capacity * ref.weight; break;
      }
      double mu = share_bits / m.mean_pkt;
      Mm1bSolution sol = mm1b_solve(arrival[qi], mu, m.b);
      delta = std::max(delta, std::abs(arrival[qi] - m.arrival_pkts));
      m.arrival_pkts = arrival[qi];
      m.service_rate = mu;
      m.blocking = sol.blocking;
      m.wait = std::max(sol.mean_delay - 1.0 / mu, 0.0);
      m.sojourn_var = sol.delay_variance;
    }
    if (iter > 0 && delta < kTol) break;
  }

  std::vector<FlowMetrics> out(sample.num_flows());
  for (int fi = 0; fi < sample.num_flows(); ++fi) {
    const FlowSpec& f = sample.flow(fi);
    FlowMetrics& m = out[fi];
    double var_sum = 0.0;
    double pass = 1.0;
    for (auto [qi, li] : sample.flow_path(fi)) {
      m.mean_delay += qm[qi].wait + f.avg_packet_size / sample.link(li).capacity;
      var_sum += qm[qi].sojourn_var;
      pass *= 1.0 - qm[qi].blocking;
    }
    m.jitter = var_sum / m.mean_delay;
    m.loss_ratio = 1.0 - pass;
  }
  return out;
}

}  // namespace netmod::qt
