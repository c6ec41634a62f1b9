#pragma once

#include <array>
#include <cstdint>

#include "netmod/traffic/descriptor.hpp"

namespace netmod::traffic {

// Seeded arrival-process generator for one flow. Identical (descriptor,
// seed) pairs produce bit-identical infinite streams.
class Generator {
 public:
  struct Arrival {
    double gap;   // time since previous arrival
    double size;  // packet size in bits
  };

  Generator(const Descriptor& desc, uint64_t seed);

  Arrival next();

 private:
  double next_gap();

  Descriptor d_;
  Rng rng_;
  double pkt_rate_ = 0.0;  // packets per time unit, long-run

  // OnOff / ModulatedExp: piecewise-constant rate phases
  bool in_on_phase_ = true;       // OnOff
  int mod_state_ = 0;             // ModulatedExp: 0 = fast, 1 = slow
  double phase_remaining_ = 0.0;  // time left in the current phase
  std::array<double, 2> state_rate_{0.0, 0.0};

  // AutocorrelatedExp: latent AR(1) value
  double ar_z_ = 0.0;
  bool ar_init_ = false;
};

struct EmpiricalStats {
  double mean_rate = 0.0;   // bits per time unit
  double gap_variance = 0.0;
  double lag1_autocorr = 0.0;  // of inter-arrival gaps; 0 when variance ~ 0
};

// Monte-Carlo signature statistics over n_draws arrivals.
EmpiricalStats empirical_stats(const Descriptor& desc, int64_t n_draws, uint64_t seed);

// Normalization constants shared by traffic features and the model.
struct FeatureNorms {
  double ti_lo = 400.0;
  double ti_hi = 2000.0;
  double buffer_hi = 64000.0;
  double occupancy_scale = 64000.0;
  double capacity_scale = 10000.0;  // only used when the load feature is ablated
};

constexpr int kFlowFeatureDim = 10;  // lambda + one-hot model + 4 param slots

// [normalized lambda, one-hot model (5), model parameter slots (4)]
std::array<double, kFlowFeatureDim> feature_vector(const Descriptor& desc,
                                                   const FeatureNorms& norms);

}  // namespace netmod::traffic
