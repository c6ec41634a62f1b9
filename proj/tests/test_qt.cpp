#include <doctest.h>

#include "fixtures.hpp"
#include "netmod/qt/mm1b.hpp"
#include "netmod/sim/simulator.hpp"

using namespace netmod;
using namespace netmod::qt;
using namespace fixtures;

TEST_CASE("mm1b closed forms") {
  // rho = 0.5, b = 2: blocking = rho^2 (1-rho) / (1-rho^3) = 1/7
  auto s = mm1b_solve(0.5, 1.0, 2);
  CHECK(s.blocking == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

  // rho = 1 degenerates to the uniform distribution over b+1 states
  auto u = mm1b_solve(1.0, 1.0, 3);
  CHECK(u.blocking == doctest::Approx(0.25).epsilon(1e-12));
  for (double p : u.state_probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));

  // lambda = 0
  auto z = mm1b_solve(0.0, 2.0, 4);
  CHECK(z.blocking == 0.0);
  CHECK(z.mean_occupancy == 0.0);
  CHECK(z.mean_delay == doctest::Approx(0.5));

  CHECK_THROWS_AS(mm1b_solve(1.0, 0.0, 3), Error);
}

TEST_CASE("mm1b state probabilities normalize and match the geometric form") {
  for (double rho : {0.3, 0.8, 1.7, 25.0}) {
    auto s = mm1b_solve(rho, 1.0, 32);
    double total = 0.0;
    for (double p : s.state_probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // independent route: P(n) / P(0) = rho^n
    if (rho < 2.0)
      CHECK(s.state_probs[5] / s.state_probs[0] == doctest::Approx(std::pow(rho, 5)).epsilon(1e-9));
  }
}

TEST_CASE("mm1b mean delay: Little's law agrees with the Erlang mixture route") {
  for (double rho : {0.3, 0.7, 0.95, 1.3}) {
    for (int b : {4, 16, 64}) {
      auto s = mm1b_solve(rho, 2.0, b);
      // accepted arrival finds n < b customers and waits n+1 services
      double mean = 0.0;
      for (int n = 0; n < b; ++n)
        mean += (s.state_probs[n] / (1.0 - s.blocking)) * (n + 1) / 2.0;
      CHECK(s.mean_delay == doctest::Approx(mean).epsilon(1e-10));
      CHECK(s.delay_variance >= 0.0);
    }
  }
}

TEST_CASE("mm1b large rho stays finite") {
  auto s = mm1b_solve(1e6, 1.0, 64);
  CHECK(std::isfinite(s.blocking));
  CHECK(s.blocking == doctest::Approx(1.0 - 1e-6).epsilon(1e-9));
}

TEST_CASE("mm1 limit: large buffer delay approaches 1/(mu-lambda)") {
  auto s = mm1_sample(0.5, 100000);
  auto pred = qt_predict(s);
  CHECK(pred[0].mean_delay == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(pred[0].loss_ratio == doctest::Approx(0.0));
}

TEST_CASE("zero-traffic flow sees only its transmission delay") {
  // two flows on disjoint forward links; the probe flow's rate is tiny
  TopologySpec t = chain(3, 1000.0);
  auto flows = std::vector<FlowSpec>{flow("probe", {{"l0:q0", "l0"}}, poisson(1e-9)),
                                     flow("other", {{"l1:q0", "l1"}}, poisson(500.0))};
  auto s = NetworkSample::build(t, flows, 500);
  auto pred = qt_predict(s);
  CHECK(pred[0].mean_delay == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("upstream blocking caps the downstream offered rate") {
  // 2000 bits/tu offered into a 500 bits/tu first hop: the shared tail sees
  // at most ~500 of it once blocking thins the flow
  auto s = shared_tail_sample(2000.0, 500.0, 500.0, 1000.0);
  auto pred = qt_predict(s);
  // flow1 loses most packets at l1
  CHECK(pred[0].loss_ratio > 0.7);
  // reconstruct the thinned rate at l3 from the hop-1 blocking
  double b1 = 1.0 - (1.0 - pred[0].loss_ratio);  // total path loss, first hop dominates
  double thinned = 2000.0 * (1.0 - b1);
  CHECK(thinned < 550.0);
  CHECK(thinned > 350.0);
}

TEST_CASE("monotonicity: raising a flow's rate never lowers path blocking") {
  auto s1 = shared_tail_sample(600.0, 500.0, 800.0, 900.0);
  auto p1 = qt_predict(s1);
  auto s2 = shared_tail_sample(900.0, 500.0, 800.0, 900.0);
  auto p2 = qt_predict(s2);
  CHECK(p2[0].loss_ratio >= p1[0].loss_ratio - 1e-12);
  CHECK(p2[1].loss_ratio >= p1[1].loss_ratio - 1e-12);
}

TEST_CASE("qt is deterministic") {
  auto s = shared_tail_sample(700.0, 600.0);
  auto a = qt_predict(s);
  auto b = qt_predict(s);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_delay == b[i].mean_delay);
    CHECK(a[i].jitter == b[i].jitter);
    CHECK(a[i].loss_ratio == b[i].loss_ratio);
  }
}

TEST_CASE("qt matches simulation on single m/m/1/k queues") {
  // the regime where the independence assumptions hold exactly
  for (double rho : {0.3, 0.6, 0.9}) {
    for (int b : {8, 32}) {
      auto s = mm1_sample(rho, b);
      auto pred = qt_predict(s);
      auto res = sim::simulate(s, {100000.0, 5000.0, 37});
      CHECK(std::abs(pred[0].mean_delay - res.flow_metrics[0].mean_delay) /
                res.flow_metrics[0].mean_delay <
            0.05);
      CHECK(std::abs(pred[0].loss_ratio - res.flow_metrics[0].loss_ratio) < 0.01);
    }
  }
}
