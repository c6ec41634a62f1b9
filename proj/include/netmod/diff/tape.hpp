#pragma once

#include <functional>
#include <vector>

#include "netmod/diff/tensor.hpp"

namespace netmod::diff {

// Handle to a node on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Dynamic reverse-mode tape. A fresh tape is built per forward pass (the
// graph shape follows the input sample); nodes are appended in evaluation
// order, which is already a topological order for the reverse sweep.
// Constructing with grad_enabled = false records values only, which skips
// every saved intermediate (inference mode).
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  Var leaf(Tensor value);

  const Tensor& value(Var x) const { return nodes_[x.id].value; }
  const Tensor& grad(Var x) const { return nodes_[x.id].grad; }

  // --- primitives ---
  Var matmul(Var a, Var b);                 // [n,k] x [k,m]
  Var add(Var a, Var b);                    // same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                    // elementwise
  Var add_row(Var a, Var bias);             // [n,d] + [1,d]
  Var affine(Var a, double k, double c);    // k*a + c elementwise
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var abs(Var a);
  Var square(Var a);
  Var concat_cols(Var a, Var b);            // [n,da],[n,db] -> [n,da+db]
  Var concat_rows(const std::vector<Var>& parts);  // stack [ni,d] blocks
  Var gather_rows(Var a, std::vector<int64_t> idx);
  // copy of base with rows[i] written at idx[i]; indices must be distinct
  Var scatter_rows(Var base, std::vector<int64_t> idx, Var rows);
  // rows summed into segments: out[seg[i],:] += a[i,:]
  Var segment_sum(Var a, std::vector<int64_t> seg, int64_t n_seg);
  Var row_scale(Var a, std::vector<double> scale);  // row i scaled by scale[i]
  Var add_const(Var a, Tensor c);
  Var mul_const(Var a, Tensor c);           // elementwise by a constant tensor
  Var reduce_sum(Var a);                    // -> [1,1]
  Var reduce_mean(Var a);                   // -> [1,1]

  // fused gated recurrent cell: z = sig([x,h] wz + bz), r = sig([x,h] wr + br),
  // c = tanh([x, r*h] wc + bc), out = (1-z)*h + z*c. One node instead of a
  // dozen; the recurrent stages dominate the model's runtime.
  Var gru(Var x, Var h, Var wz, Var bz, Var wr, Var br, Var wc, Var bc);

  // reverse sweep from a scalar loss; gradients accumulate on every node
  void backward(Var loss);

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, Node&)> back;  // empty for leaves
  };

  Var push(Tensor value, std::function<void(Tape&, Node&)> back);
  Tensor& grad_buf(Var x);

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;

  friend struct TapeAccess;
};

}  // namespace netmod::diff
