#include "netmod/sim/scheduler.hpp"

#include <algorithm>

namespace netmod::sim {

PortScheduler::PortScheduler(SchedPolicy policy, std::vector<double> weights, double drr_quantum)
    : policy_(policy), weights_(std::move(weights)), quantum_base_(drr_quantum) {
  drr_listed_.assign(weights_.size(), 0);
}

void PortScheduler::on_enqueue(std::vector<QueueState*>& queues, int qi, QueuedPacket& pkt,
                               double /*now*/) {
  if (policy_ == SchedPolicy::Wfq) {
    QueueState& q = *queues[qi];
    double start = std::max(virtual_time_, q.last_finish_tag);
    pkt.finish_tag = start + pkt.size / weights_[qi];
    q.last_finish_tag = pkt.finish_tag;
  } else if (policy_ == SchedPolicy::Drr) {
    if (!drr_listed_[qi]) {
      drr_listed_[qi] = 1;
      drr_active_.push_back(qi);
    }
  }
}

int PortScheduler::select_next(std::vector<QueueState*>& queues) {
  switch (policy_) {
    case SchedPolicy::Fifo:
      if (!queues[0]->packets.empty()) return 0;
      fail(Errc::AllQueuesEmpty, "FIFO select on an empty port");
    case SchedPolicy::StrictPriority:
      for (int i = 0; i < (int)queues.size(); ++i)
        if (!queues[i]->packets.empty()) return i;
      fail(Errc::AllQueuesEmpty, "SP select on an empty port");
    case SchedPolicy::Wfq: {
      int best = -1;
      for (int i = 0; i < (int)queues.size(); ++i) {
        if (queues[i]->packets.empty()) continue;
        if (best < 0 || queues[i]->packets.front().finish_tag <
                            queues[best]->packets.front().finish_tag)
          best = i;
      }
      if (best < 0) fail(Errc::AllQueuesEmpty, "WFQ select on an empty port");
      on_service_start(queues[best]->packets.front().finish_tag);
      return best;
    }
    case SchedPolicy::Drr: {
      // Deficit round robin: the front queue keeps transmitting while its
      // deficit covers the head packet, then rotates with the deficit kept.
      // every full rotation credits each active queue one quantum, so a head
      // packet is reachable in at most size/quantum rounds; the guard only
      // trips on a zero quantum
      int guard = 0;
      while (!drr_active_.empty()) {
        if (++guard > 1000000)
          fail(Errc::AllQueuesEmpty, "DRR failed to find a serviceable queue");
        int qi = drr_active_.front();
        QueueState& q = *queues[qi];
        if (q.packets.empty()) {
          // emptied queues leave the round and forfeit their deficit
          q.deficit = 0.0;
          drr_listed_[qi] = 0;
          drr_active_.pop_front();
          drr_front_credited_ = false;
          continue;
        }
        if (!drr_front_credited_) {
          q.deficit += quantum_base_ * weights_[qi];
          drr_front_credited_ = true;
        }
        if (q.packets.front().size <= q.deficit + 1e-9) {
          q.deficit -= q.packets.front().size;
          return qi;
        }
        drr_active_.pop_front();
        drr_active_.push_back(qi);
        drr_front_credited_ = false;
      }
      fail(Errc::AllQueuesEmpty, "DRR select on an empty port");
    }
  }
  fail(Errc::AllQueuesEmpty, "unreachable");
}

void PortScheduler::on_dequeue(std::vector<QueueState*>& queues, int qi) {
  if (policy_ == SchedPolicy::Drr) {
    QueueState& q = *queues[qi];
    if (q.packets.empty()) {
      q.deficit = 0.0;
      if (!drr_active_.empty() && drr_active_.front() == qi) {
        drr_listed_[qi] = 0;
        drr_active_.pop_front();
        drr_front_credited_ = false;
      }
    }
  } else if (policy_ == SchedPolicy::Wfq) {
    // reset the virtual clock once the port drains completely
    bool all_empty = true;
    for (auto* q : queues) all_empty &= q->packets.empty();
    if (all_empty) {
      virtual_time_ = 0.0;
      for (auto* q : queues) q->last_finish_tag = 0.0;
    }
  }
}

}  // namespace netmod::sim
