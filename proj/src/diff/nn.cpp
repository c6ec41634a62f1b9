#include "netmod/diff/nn.hpp"

#include <cmath>

namespace netmod::diff {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  auto [it, fresh] = params_.emplace(name, std::move(t));
  if (!fresh) fail(Errc::ShapeMismatch, "parameter '" + name + "' registered twice");
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail(Errc::UnknownReference, "unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(Errc::UnknownReference, "unknown parameter '" + name + "'");
  return it->second;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

BoundParams::BoundParams(Tape& tape, const ParamStore& store) : tape_(&tape), store_(&store) {
  for (const auto& [name, t] : store.all()) vars_[name] = tape.leaf(t);
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) fail(Errc::UnknownReference, "unbound parameter '" + name + "'");
  return it->second;
}

Tensor BoundParams::grad(const std::string& name) const {
  Var v = (*this)[name];
  const Tensor& g = tape_->grad(v);
  if (g.size() == 0) {
    const Tensor& val = tape_->value(v);
    return Tensor::zeros(val.rows, val.cols);
  }
  return g;
}

Tensor glorot_uniform(int64_t rows, int64_t cols, Rng& rng) {
  Tensor t(rows, cols);
  double limit = std::sqrt(6.0 / (double)(rows + cols));
  for (double& x : t.v) x = rng.uniform(-limit, limit);
  return t;
}

Var dense(Tape& tp, Var x, Var weights, Var bias, Activation act) {
  Var y = tp.add_row(tp.matmul(x, weights), bias);
  switch (act) {
    case Activation::Linear: return y;
    case Activation::Relu: return tp.relu(y);
    case Activation::Sigmoid: return tp.sigmoid(y);
  }
  return y;
}

void init_gru(ParamStore& store, const std::string& prefix, int d_in, int d_h, Rng& rng) {
  store.add(prefix + ".wz", glorot_uniform(d_in + d_h, d_h, rng));
  store.add(prefix + ".bz", Tensor::zeros(1, d_h));
  store.add(prefix + ".wr", glorot_uniform(d_in + d_h, d_h, rng));
  store.add(prefix + ".br", Tensor::zeros(1, d_h));
  store.add(prefix + ".wc", glorot_uniform(d_in + d_h, d_h, rng));
  store.add(prefix + ".bc", Tensor::zeros(1, d_h));
}

GruVars bind_gru(const BoundParams& p, const std::string& prefix) {
  return GruVars{p[prefix + ".wz"], p[prefix + ".bz"], p[prefix + ".wr"],
                 p[prefix + ".br"], p[prefix + ".wc"], p[prefix + ".bc"]};
}

Var gru_step(Tape& tp, Var h, Var x, const GruVars& g) {
  return tp.gru(x, h, g.wz, g.bz, g.wr, g.br, g.wc, g.bc);
}

void init_mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& dims,
              Rng& rng) {
  for (size_t k = 0; k + 1 < dims.size(); ++k) {
    std::string layer = prefix + ".l" + std::to_string(k);
    store.add(layer + ".w", glorot_uniform(dims[k], dims[k + 1], rng));
    store.add(layer + ".b", Tensor::zeros(1, dims[k + 1]));
  }
}

Var mlp(Tape& tp, const BoundParams& p, const std::string& prefix, Var x, int n_layers,
        Activation out_act) {
  Var h = x;
  for (int k = 0; k < n_layers; ++k) {
    std::string layer = prefix + ".l" + std::to_string(k);
    Activation act = k + 1 < n_layers ? Activation::Relu : out_act;
    h = dense(tp, h, p[layer + ".w"], p[layer + ".b"], act);
  }
  return h;
}

void Adam::step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, (double)t_);
  double bc2 = 1.0 - std::pow(beta2_, (double)t_);
  for (auto& [name, p] : params.all()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    require_shape(g.same_shape(p), "adam gradient shape");
    Tensor& m = m_.try_emplace(name, Tensor::zeros(p.rows, p.cols)).first->second;
    Tensor& v = v_.try_emplace(name, Tensor::zeros(p.rows, p.cols)).first->second;
    for (int64_t i = 0; i < p.size(); ++i) {
      m.v[i] = beta1_ * m.v[i] + (1.0 - beta1_) * g.v[i];
      v.v[i] = beta2_ * v.v[i] + (1.0 - beta2_) * g.v[i] * g.v[i];
      double mhat = m.v[i] / bc1;
      double vhat = v.v[i] / bc2;
      p.v[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace netmod::diff
