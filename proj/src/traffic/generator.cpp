#include "netmod/traffic/generator.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "netmod/core/error.hpp"

namespace netmod::traffic {

const char* model_name(Model m) {
  switch (m) {
    case Model::Poisson: return "Poisson";
    case Model::ConstantBitrate: return "ConstantBitrate";
    case Model::OnOff: return "OnOff";
    case Model::AutocorrelatedExp: return "AutocorrelatedExp";
    case Model::ModulatedExp: return "ModulatedExp";
  }
  return "?";
}

Model model_from_name(const std::string& name) {
  if (name == "Poisson") return Model::Poisson;
  if (name == "ConstantBitrate") return Model::ConstantBitrate;
  if (name == "OnOff") return Model::OnOff;
  if (name == "AutocorrelatedExp") return Model::AutocorrelatedExp;
  if (name == "ModulatedExp") return Model::ModulatedExp;
  fail(Errc::ParseError, "unknown traffic model '" + name + "'");
}

PacketSizeDist PacketSizeDist::constant(double mean) {
  PacketSizeDist d;
  d.kind = Kind::Constant;
  d.mean = mean;
  return d;
}

PacketSizeDist PacketSizeDist::three_point(std::array<double, 3> sizes,
                                           std::array<double, 3> probs) {
  PacketSizeDist d;
  d.kind = Kind::ThreePoint;
  d.sizes = sizes;
  d.probs = probs;
  d.mean = sizes[0] * probs[0] + sizes[1] * probs[1] + sizes[2] * probs[2];
  return d;
}

PacketSizeDist PacketSizeDist::exponential(double mean) {
  PacketSizeDist d;
  d.kind = Kind::Exponential;
  d.mean = mean;
  return d;
}

double PacketSizeDist::draw(Rng& rng) const {
  switch (kind) {
    case Kind::Constant: return mean;
    case Kind::ThreePoint: {
      double u = rng.uniform();
      if (u < probs[0]) return sizes[0];
      if (u < probs[0] + probs[1]) return sizes[1];
      return sizes[2];
    }
    case Kind::Exponential: return rng.exponential(1.0 / mean);
  }
  return mean;
}

double PacketSizeDist::size_bound() const {
  switch (kind) {
    case Kind::Constant: return mean;
    case Kind::ThreePoint: return std::max({sizes[0], sizes[1], sizes[2]});
    case Kind::Exponential: return 3.0 * mean;
  }
  return mean;
}

void PacketSizeDist::validate() const {
  if (!(mean > 0)) fail(Errc::InvalidTopology, "packet size mean must be > 0");
  if (kind == Kind::ThreePoint) {
    double psum = probs[0] + probs[1] + probs[2];
    if (std::abs(psum - 1.0) > 1e-9)
      fail(Errc::InvalidTopology, "packet size probabilities must sum to 1");
    for (double s : sizes)
      if (!(s > 0)) fail(Errc::InvalidTopology, "packet sizes must be > 0");
    double m = sizes[0] * probs[0] + sizes[1] * probs[1] + sizes[2] * probs[2];
    if (std::abs(m - mean) > 1e-6 * mean)
      fail(Errc::InvalidTopology, "stated packet size mean disagrees with the distribution");
  }
}

void Descriptor::validate() const {
  if (!(lambda > 0)) fail(Errc::InvalidTopology, "traffic lambda must be > 0");
  packet_size.validate();
  switch (model) {
    case Model::OnOff:
      if (!(t_on > 0) || !(t_off >= 0))
        fail(Errc::InvalidTopology, "OnOff requires t_on > 0 and t_off >= 0");
      break;
    case Model::AutocorrelatedExp:
      if (!(rho_a > -1.0 && rho_a < 1.0))
        fail(Errc::InvalidTopology, "AutocorrelatedExp requires rho_a in (-1,1)");
      break;
    case Model::ModulatedExp:
      if (!(alpha > 0) || !(beta > 1.0))
        fail(Errc::InvalidTopology, "ModulatedExp requires alpha > 0 and beta > 1");
      break;
    default: break;
  }
}

Generator::Generator(const Descriptor& desc, uint64_t seed) : d_(desc), rng_(seed) {
  pkt_rate_ = d_.packet_rate();
  switch (d_.model) {
    case Model::OnOff: {
      // Poisson process gated by exponential on/off sojourns; the on-phase
      // rate is boosted so the long-run average stays at lambda.
      double duty = d_.t_on / (d_.t_on + d_.t_off);
      state_rate_ = {pkt_rate_ / duty, 0.0};
      in_on_phase_ = true;
      phase_remaining_ = rng_.exponential(1.0 / d_.t_on);
      break;
    }
    case Model::ModulatedExp: {
      // two-state semi-Markov modulation, fast:slow packet rate 10:1 with
      // equal mean sojourns, so each state holds half the time
      state_rate_ = {pkt_rate_ * 20.0 / 11.0, pkt_rate_ * 2.0 / 11.0};
      mod_state_ = 0;
      phase_remaining_ = rng_.pareto(d_.beta, d_.alpha);
      break;
    }
    default: break;
  }
}

double Generator::next_gap() {
  switch (d_.model) {
    case Model::Poisson:
      return rng_.exponential(pkt_rate_);
    case Model::ConstantBitrate:
      return 1.0 / pkt_rate_;
    case Model::AutocorrelatedExp: {
      // stationary AR(1) mapped through the Gaussian copula onto
      // exponential marginals
      if (!ar_init_) {
        ar_z_ = rng_.normal();
        ar_init_ = true;
      } else {
        ar_z_ = d_.rho_a * ar_z_ + std::sqrt(1.0 - d_.rho_a * d_.rho_a) * rng_.normal();
      }
      double u = normal_cdf(ar_z_);
      u = std::min(u, 1.0 - 1e-16);
      return -std::log1p(-u) / pkt_rate_;
    }
    case Model::OnOff:
    case Model::ModulatedExp: {
      // piecewise-constant-rate Poisson; crossing a phase boundary redraws
      // the residual gap at the new rate (exact by memorylessness)
      double gap = 0.0;
      for (;;) {
        bool active = d_.model == Model::ModulatedExp ? true : in_on_phase_;
        double rate = d_.model == Model::ModulatedExp ? state_rate_[mod_state_]
                                                      : (in_on_phase_ ? state_rate_[0] : 0.0);
        double draw = active && rate > 0 ? rng_.exponential(rate)
                                         : std::numeric_limits<double>::infinity();
        if (draw <= phase_remaining_) {
          phase_remaining_ -= draw;
          return gap + draw;
        }
        gap += phase_remaining_;
        if (d_.model == Model::OnOff) {
          in_on_phase_ = !in_on_phase_;
          double mean = in_on_phase_ ? d_.t_on : d_.t_off;
          phase_remaining_ = mean > 0 ? rng_.exponential(1.0 / mean) : 0.0;
        } else {
          mod_state_ = 1 - mod_state_;
          phase_remaining_ = rng_.pareto(d_.beta, d_.alpha);
        }
      }
    }
  }
  return 1.0 / pkt_rate_;
}

Generator::Arrival Generator::next() {
  double gap = next_gap();
  double size = d_.model == Model::ConstantBitrate ? d_.packet_size.mean
                                                   : d_.packet_size.draw(rng_);
  return {gap, size};
}

EmpiricalStats empirical_stats(const Descriptor& desc, int64_t n_draws, uint64_t seed) {
  Generator gen(desc, seed);
  double sum_gap = 0.0, sum_bits = 0.0;
  std::vector<double> gaps;
  gaps.reserve(n_draws);
  for (int64_t i = 0; i < n_draws; ++i) {
    auto a = gen.next();
    gaps.push_back(a.gap);
    sum_gap += a.gap;
    sum_bits += a.size;
  }
  EmpiricalStats st;
  st.mean_rate = sum_bits / sum_gap;
  double mean_gap = sum_gap / n_draws;
  double m2 = 0.0;
  for (double g : gaps) m2 += (g - mean_gap) * (g - mean_gap);
  st.gap_variance = m2 / (n_draws - 1);
  if (st.gap_variance > 1e-15 * mean_gap * mean_gap) {
    double cov = 0.0;
    for (int64_t i = 0; i + 1 < n_draws; ++i)
      cov += (gaps[i] - mean_gap) * (gaps[i + 1] - mean_gap);
    cov /= (n_draws - 1);
    st.lag1_autocorr = cov / st.gap_variance;
  }
  return st;
}

std::array<double, kFlowFeatureDim> feature_vector(const Descriptor& desc,
                                                   const FeatureNorms& norms) {
  std::array<double, kFlowFeatureDim> x{};
  x[0] = (desc.lambda - norms.ti_lo) / (norms.ti_hi - norms.ti_lo);
  x[1 + static_cast<int>(desc.model)] = 1.0;
  switch (desc.model) {
    case Model::OnOff:
      x[6] = desc.t_on;
      x[7] = desc.t_off;
      break;
    case Model::AutocorrelatedExp:
      x[6] = desc.rho_a;
      break;
    case Model::ModulatedExp:
      x[6] = desc.alpha;
      x[7] = desc.beta;
      break;
    default: break;
  }
  return x;
}

}  // namespace netmod::traffic
