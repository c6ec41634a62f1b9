#pragma once

#include <deque>
#include <vector>

#include "netmod/core/error.hpp"
#include "netmod/core/types.hpp"

namespace netmod::sim {

struct QueuedPacket {
  double size = 0.0;
  double origin = 0.0;   // injection time at the flow source
  int flow = -1;
  int hop = -1;
  double finish_tag = 0.0;  // WFQ virtual finish time
};

// Runtime state of one queue. The packet in transmission stays at the head
// until its service completes, so occupied_bits covers the whole system.
struct QueueState {
  std::deque<QueuedPacket> packets;
  double occupied_bits = 0.0;
  double buffer_bits = 0.0;
  int packet_cap = 0;  // 0 = no packet-count cap
  double weight = 0.0;

  // statistics (reset at warmup)
  double occupancy_integral = 0.0;
  double last_change = 0.0;
  uint64_t enqueued = 0, dropped = 0;
  double enqueued_bits = 0.0;

  // WFQ bookkeeping
  double last_finish_tag = 0.0;
  // DRR deficit counter
  double deficit = 0.0;

  bool fits(double size) const {
    if (occupied_bits + size > buffer_bits + 1e-9) return false;
    if (packet_cap > 0 && (int)packets.size() >= packet_cap) return false;
    return true;
  }
};

// Scheduling state of one output port. select_next() picks the queue whose
// head transmits next; the caller guarantees at least one nonempty queue.
class PortScheduler {
 public:
  PortScheduler() = default;
  PortScheduler(SchedPolicy policy, std::vector<double> weights, double drr_quantum);

  // call when a packet lands in queue qi (after it is pushed)
  void on_enqueue(std::vector<QueueState*>& queues, int qi, QueuedPacket& pkt, double now);

  int select_next(std::vector<QueueState*>& queues);

  // call after the served head of queue qi was popped
  void on_dequeue(std::vector<QueueState*>& queues, int qi);

  // virtual time advances to the tag of the packet entering service
  void on_service_start(double finish_tag) { virtual_time_ = finish_tag; }

  SchedPolicy policy() const { return policy_; }

 private:
  SchedPolicy policy_ = SchedPolicy::Fifo;
  std::vector<double> weights_;
  double quantum_base_ = 0.0;

  double virtual_time_ = 0.0;  // WFQ

  std::deque<int> drr_active_;
  std::vector<char> drr_listed_;
  bool drr_front_credited_ = false;
};

}  // namespace netmod::sim
