#pragma once

#include <vector>

#include "netmod/core/sample.hpp"

namespace netmod::qt {

// Closed-form solution of a single M/M/1/b queue (b = max customers in the
// system, including the one in service).
struct Mm1bSolution {
  double rho = 0.0;
  int b = 0;
  std::vector<double> state_probs;  // P(0..b)
  double blocking = 0.0;            // P(b)
  double mean_occupancy = 0.0;      // E[N], customers
  double mean_delay = 0.0;          // sojourn of accepted customers
  double delay_variance = 0.0;      // of the accepted-customer sojourn
};

// lambda, mu in packets per time unit.
Mm1bSolution mm1b_solve(double lambda, double mu, int b);

// Per-flow predictions under independent M/M/1/b queues with hop-by-hop
// blocking thinning, solved as a fixed point over queue arrival rates.
std::vector<FlowMetrics> qt_predict(const NetworkSample& sample);

}  // namespace netmod::qt
