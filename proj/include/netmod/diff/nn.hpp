#pragma once

#include <map>
#include <string>
#include <vector>

#include "netmod/core/rng.hpp"
#include "netmod/diff/tape.hpp"

namespace netmod::diff {

enum class Activation { Linear, Relu, Sigmoid };

// Named parameter tensors with a deterministic iteration order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::map<std::string, Tensor>& all() { return params_; }
  int64_t total_size() const;

 private:
  std::map<std::string, Tensor> params_;
};

// Parameters bound onto a tape for one forward/backward pass.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamStore& store);
  Var operator[](const std::string& name) const;
  // gradient by name after backward(); zeros if the parameter was unused
  Tensor grad(const std::string& name) const;

 private:
  Tape* tape_;
  const ParamStore* store_;
  std::map<std::string, Var> vars_;
};

// activation(x W + b); weights [d_in, d_out], bias [1, d_out]
Var dense(Tape& tp, Var x, Var weights, Var bias, Activation act);

struct GruVars {
  Var wz, bz, wr, br, wc, bc;
};

// Registers GRU parameters named <prefix>.{wz,bz,wr,br,wc,bc}; each kernel
// is [d_in + d_h, d_h], Glorot-uniform, biases zero.
void init_gru(ParamStore& store, const std::string& prefix, int d_in, int d_h, Rng& rng);
GruVars bind_gru(const BoundParams& p, const std::string& prefix);

// z = sig(Wz [x,h] + bz); r = sig(Wr [x,h] + br)
// c = tanh(Wc [x, r*h] + bc); h' = (1-z)*h + z*c
Var gru_step(Tape& tp, Var h, Var x, const GruVars& g);

// Registers an MLP named <prefix>.l<k>.{w,b}; hidden layers use ReLU.
void init_mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& dims,
              Rng& rng);
Var mlp(Tape& tp, const BoundParams& p, const std::string& prefix, Var x, int n_layers,
        Activation out_act);

Tensor glorot_uniform(int64_t rows, int64_t cols, Rng& rng);

// Adam with bias correction; state lives alongside the parameters it tracks.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& params, const std::map<std::string, Tensor>& grads);
  int64_t step_count() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace netmod::diff
