#pragma once

#include <array>
#include <string>

#include "netmod/core/rng.hpp"

namespace netmod::traffic {

enum class Model {
  Poisson,
  ConstantBitrate,
  OnOff,
  AutocorrelatedExp,
  ModulatedExp,
};

constexpr int kModelCount = 5;

const char* model_name(Model m);
Model model_from_name(const std::string& name);

// Distribution of packet sizes in bits. ThreePoint is the default used by
// dataset generation; Exponential exists for queuing-theory parity checks.
struct PacketSizeDist {
  enum class Kind { Constant, ThreePoint, Exponential };

  Kind kind = Kind::Constant;
  double mean = 1000.0;
  std::array<double, 3> sizes{500.0, 1000.0, 1500.0};
  std::array<double, 3> probs{0.25, 0.5, 0.25};

  static PacketSizeDist constant(double mean);
  static PacketSizeDist three_point(std::array<double, 3> sizes, std::array<double, 3> probs);
  static PacketSizeDist exponential(double mean);

  double draw(Rng& rng) const;
  // upper bound on a single packet (used for DRR quanta); exponential is
  // unbounded so a generous multiple of the mean is reported instead
  double size_bound() const;
  void validate() const;
};

// One of the supported stochastic traffic processes plus its parameters.
// lambda is the mean offered bit rate; unused parameter fields stay zero.
struct Descriptor {
  Model model = Model::Poisson;
  double lambda = 0.0;

  double t_on = 0.0;   // OnOff: mean on-phase duration
  double t_off = 0.0;  // OnOff: mean off-phase duration
  double rho_a = 0.0;  // AutocorrelatedExp: lag-1 coefficient of the latent AR(1)
  double alpha = 0.0;  // ModulatedExp: burst sojourn scale
  double beta = 0.0;   // ModulatedExp: sojourn tail shape (> 1)
  double noise_eps = 0.0;  // reserved noise-amplitude slot, unused by default

  PacketSizeDist packet_size;

  double packet_rate() const { return lambda / packet_size.mean; }
  void validate() const;
};

}  // namespace netmod::traffic
