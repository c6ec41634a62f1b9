#include "netmod/diff/tape.hpp"

#include <memory>

#include <cmath>

namespace netmod::diff {

namespace {

// y[n,m] += a[n,k] * b[k,m]; four-row blocks reuse each b row from registers
// and the contiguous j loop vectorizes
void matmul_acc(const double* __restrict a, const double* __restrict b, double* __restrict y,
                int64_t n, int64_t k, int64_t m) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* __restrict a0 = a + i * k;
    const double* __restrict a1 = a0 + k;
    const double* __restrict a2 = a1 + k;
    const double* __restrict a3 = a2 + k;
    double* __restrict y0 = y + i * m;
    double* __restrict y1 = y0 + m;
    double* __restrict y2 = y1 + m;
    double* __restrict y3 = y2 + m;
    for (int64_t p = 0; p < k; ++p) {
      const double* __restrict bp = b + p * m;
      double c0 = a0[p], c1 = a1[p], c2 = a2[p], c3 = a3[p];
      for (int64_t j = 0; j < m; ++j) {
        double bv = bp[j];
        y0[j] += c0 * bv;
        y1[j] += c1 * bv;
        y2[j] += c2 * bv;
        y3[j] += c3 * bv;
      }
    }
  }
  for (; i < n; ++i) {
    const double* __restrict ai = a + i * k;
    double* __restrict yi = y + i * m;
    for (int64_t p = 0; p < k; ++p) {
      double aip = ai[p];
      const double* __restrict bp = b + p * m;
      for (int64_t j = 0; j < m; ++j) yi[j] += aip * bp[j];
    }
  }
}

// y[n,k] += g[n,m] * b[k,m]^T
void matmul_bt_acc(const double* __restrict g, const double* __restrict b, double* __restrict y,
                   int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const double* __restrict gi = g + i * m;
    double* __restrict yi = y + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double* __restrict bp = b + p * m;
      double acc = 0.0;
      for (int64_t j = 0; j < m; ++j) acc += gi[j] * bp[j];
      yi[p] += acc;
    }
  }
}

// y[k,m] += a[n,k]^T * g[n,m]
void matmul_at_acc(const double* __restrict a, const double* __restrict g, double* __restrict y,
                   int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const double* __restrict ai = a + i * k;
    const double* __restrict gi = g + i * m;
    for (int64_t p = 0; p < k; ++p) {
      double aip = ai[p];
      if (aip == 0.0) continue;
      double* __restrict yp = y + p * m;
      for (int64_t j = 0; j < m; ++j) yp[j] += aip * gi[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, Node&)> back) {
  if (!grad_enabled_) back = {};
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
  return Var{(int32_t)nodes_.size() - 1};
}

Tensor& Tape::grad_buf(Var x) {
  Node& n = nodes_[x.id];
  if (n.grad.size() == 0) n.grad = Tensor::zeros(n.value.rows, n.value.cols);
  return n.grad;
}

Var Tape::leaf(Tensor value) { return push(std::move(value), {}); }

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_shape(ta.cols == tb.rows, "matmul inner dimensions");
  Tensor out(ta.rows, tb.cols);
  matmul_acc(ta.data(), tb.data(), out.data(), ta.rows, ta.cols, tb.cols);
  return push(std::move(out), [a, b](Tape& tp, Node& n) {
    const Tensor& ta = tp.value(a);
    const Tensor& tb = tp.value(b);
    matmul_bt_acc(n.grad.data(), tb.data(), tp.grad_buf(a).data(), ta.rows, ta.cols, tb.cols);
    matmul_at_acc(ta.data(), n.grad.data(), tp.grad_buf(b).data(), ta.rows, ta.cols, tb.cols);
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_shape(ta.same_shape(tb), "add shapes");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.v[i] += tb.v[i];
  return push(std::move(out), [a, b](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    Tensor& gb = tp.grad_buf(b);
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      ga.v[i] += n.grad.v[i];
      gb.v[i] += n.grad.v[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_shape(ta.same_shape(tb), "sub shapes");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.v[i] -= tb.v[i];
  return push(std::move(out), [a, b](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    Tensor& gb = tp.grad_buf(b);
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      ga.v[i] += n.grad.v[i];
      gb.v[i] -= n.grad.v[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_shape(ta.same_shape(tb), "mul shapes");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.v[i] *= tb.v[i];
  return push(std::move(out), [a, b](Tape& tp, Node& n) {
    const Tensor& ta = tp.value(a);
    const Tensor& tb = tp.value(b);
    Tensor& ga = tp.grad_buf(a);
    Tensor& gb = tp.grad_buf(b);
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      ga.v[i] += n.grad.v[i] * tb.v[i];
      gb.v[i] += n.grad.v[i] * ta.v[i];
    }
  });
}

Var Tape::add_row(Var a, Var bias) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(bias);
  require_shape(tb.rows == 1 && tb.cols == ta.cols, "bias row shape");
  Tensor out = ta;
  for (int64_t i = 0; i < ta.rows; ++i)
    for (int64_t j = 0; j < ta.cols; ++j) out.at(i, j) += tb.v[j];
  return push(std::move(out), [a, bias](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    Tensor& gb = tp.grad_buf(bias);
    for (int64_t i = 0; i < n.grad.rows; ++i)
      for (int64_t j = 0; j < n.grad.cols; ++j) {
        ga.at(i, j) += n.grad.at(i, j);
        gb.v[j] += n.grad.at(i, j);
      }
  });
}

Var Tape::affine(Var a, double k, double c) {
  Tensor out = value(a);
  for (double& x : out.v) x = k * x + c;
  return push(std::move(out), [a, k](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) ga.v[i] += k * n.grad.v[i];
  });
}

Var Tape::sigmoid(Var a) {
  Tensor out = value(a);
  for (double& x : out.v) x = stable_sigmoid(x);
  return push(std::move(out), [a](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      double y = n.value.v[i];
      ga.v[i] += n.grad.v[i] * y * (1.0 - y);
    }
  });
}

Var Tape::tanh(Var a) {
  Tensor out = value(a);
  for (double& x : out.v) x = std::tanh(x);
  return push(std::move(out), [a](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      double y = n.value.v[i];
      ga.v[i] += n.grad.v[i] * (1.0 - y * y);
    }
  });
}

Var Tape::relu(Var a) {
  Tensor out = value(a);
  for (double& x : out.v) x = x > 0 ? x : 0.0;
  return push(std::move(out), [a](Tape& tp, Node& n) {
    const Tensor& ta = tp.value(a);
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i)
      if (ta.v[i] > 0) ga.v[i] += n.grad.v[i];
  });
}

Var Tape::softplus(Var a) {
  Tensor out = value(a);
  for (double& x : out.v) x = stable_softplus(x);
  return push(std::move(out), [a](Tape& tp, Node& n) {
    const Tensor& ta = tp.value(a);
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i)
      ga.v[i] += n.grad.v[i] * stable_sigmoid(ta.v[i]);
  });
}

Var Tape::abs(Var a) {
  Tensor out = value(a);
  for (double& x : out.v) x = std::abs(x);
  return push(std::move(out), [a](Tape& tp, Node& n) {
    const Tensor& ta = tp.value(a);
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      double s = ta.v[i] > 0 ? 1.0 : (ta.v[i] < 0 ? -1.0 : 0.0);
      ga.v[i] += n.grad.v[i] * s;
    }
  });
}

Var Tape::square(Var a) {
  Tensor out = value(a);
  for (double& x : out.v) x = x * x;
  return push(std::move(out), [a](Tape& tp, Node& n) {
    const Tensor& ta = tp.value(a);
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) ga.v[i] += n.grad.v[i] * 2.0 * ta.v[i];
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_shape(ta.rows == tb.rows, "concat rows");
  Tensor out(ta.rows, ta.cols + tb.cols);
  for (int64_t i = 0; i < ta.rows; ++i) {
    std::copy(ta.data() + i * ta.cols, ta.data() + (i + 1) * ta.cols,
              out.data() + i * out.cols);
    std::copy(tb.data() + i * tb.cols, tb.data() + (i + 1) * tb.cols,
              out.data() + i * out.cols + ta.cols);
  }
  int64_t ca = ta.cols;
  return push(std::move(out), [a, b, ca](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    Tensor& gb = tp.grad_buf(b);
    for (int64_t i = 0; i < n.grad.rows; ++i) {
      for (int64_t j = 0; j < ca; ++j) ga.at(i, j) += n.grad.at(i, j);
      for (int64_t j = ca; j < n.grad.cols; ++j) gb.at(i, j - ca) += n.grad.at(i, j);
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  require_shape(!parts.empty(), "concat_rows needs at least one block");
  int64_t cols = value(parts[0]).cols;
  int64_t rows = 0;
  for (Var v : parts) {
    require_shape(value(v).cols == cols, "concat_rows column widths");
    rows += value(v).rows;
  }
  Tensor out(rows, cols);
  int64_t at = 0;
  for (Var v : parts) {
    const Tensor& t = value(v);
    std::copy(t.v.begin(), t.v.end(), out.data() + at * cols);
    at += t.rows;
  }
  return push(std::move(out), [parts](Tape& tp, Node& n) {
    int64_t at = 0;
    for (Var v : parts) {
      Tensor& g = tp.grad_buf(v);
      const double* src = n.grad.data() + at * n.grad.cols;
      for (int64_t i = 0; i < g.size(); ++i) g.v[i] += src[i];
      at += g.rows;
    }
  });
}

Var Tape::gather_rows(Var a, std::vector<int64_t> idx) {
  const Tensor& ta = value(a);
  Tensor out((int64_t)idx.size(), ta.cols);
  for (int64_t i = 0; i < (int64_t)idx.size(); ++i)
    std::copy(ta.data() + idx[i] * ta.cols, ta.data() + (idx[i] + 1) * ta.cols,
              out.data() + i * ta.cols);
  return push(std::move(out), [a, idx = std::move(idx)](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < (int64_t)idx.size(); ++i)
      for (int64_t j = 0; j < n.grad.cols; ++j) ga.at(idx[i], j) += n.grad.at(i, j);
  });
}

Var Tape::scatter_rows(Var base, std::vector<int64_t> idx, Var rows) {
  const Tensor& tb = value(base);
  const Tensor& tr = value(rows);
  require_shape(tb.cols == tr.cols && (int64_t)idx.size() == tr.rows, "scatter shapes");
  Tensor out = tb;
  for (int64_t i = 0; i < tr.rows; ++i)
    std::copy(tr.data() + i * tr.cols, tr.data() + (i + 1) * tr.cols,
              out.data() + idx[i] * out.cols);
  return push(std::move(out), [base, rows, idx = std::move(idx)](Tape& tp, Node& n) {
    // overwritten rows route their gradient to `rows`, the rest to `base`
    Tensor& gb = tp.grad_buf(base);
    Tensor& gr = tp.grad_buf(rows);
    std::vector<char> overwritten(n.grad.rows, 0);
    for (int64_t i = 0; i < (int64_t)idx.size(); ++i) {
      overwritten[idx[i]] = 1;
      for (int64_t j = 0; j < n.grad.cols; ++j) gr.at(i, j) += n.grad.at(idx[i], j);
    }
    for (int64_t r = 0; r < n.grad.rows; ++r)
      if (!overwritten[r])
        for (int64_t j = 0; j < n.grad.cols; ++j) gb.at(r, j) += n.grad.at(r, j);
  });
}

Var Tape::segment_sum(Var a, std::vector<int64_t> seg, int64_t n_seg) {
  const Tensor& ta = value(a);
  require_shape((int64_t)seg.size() == ta.rows, "segment ids cover rows");
  Tensor out(n_seg, ta.cols);
  for (int64_t i = 0; i < ta.rows; ++i)
    for (int64_t j = 0; j < ta.cols; ++j) out.at(seg[i], j) += ta.at(i, j);
  return push(std::move(out), [a, seg = std::move(seg)](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < ga.rows; ++i)
      for (int64_t j = 0; j < ga.cols; ++j) ga.at(i, j) += n.grad.at(seg[i], j);
  });
}

Var Tape::row_scale(Var a, std::vector<double> scale) {
  const Tensor& ta = value(a);
  require_shape((int64_t)scale.size() == ta.rows, "row scale length");
  Tensor out = ta;
  for (int64_t i = 0; i < ta.rows; ++i)
    for (int64_t j = 0; j < ta.cols; ++j) out.at(i, j) *= scale[i];
  return push(std::move(out), [a, scale = std::move(scale)](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.rows; ++i)
      for (int64_t j = 0; j < n.grad.cols; ++j) ga.at(i, j) += n.grad.at(i, j) * scale[i];
  });
}

Var Tape::add_const(Var a, Tensor c) {
  const Tensor& ta = value(a);
  require_shape(ta.same_shape(c), "add_const shapes");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.v[i] += c.v[i];
  return push(std::move(out), [a](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) ga.v[i] += n.grad.v[i];
  });
}

Var Tape::mul_const(Var a, Tensor c) {
  const Tensor& ta = value(a);
  require_shape(ta.same_shape(c), "mul_const shapes");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.v[i] *= c.v[i];
  return push(std::move(out), [a, c = std::move(c)](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < n.grad.size(); ++i) ga.v[i] += n.grad.v[i] * c.v[i];
  });
}

Var Tape::reduce_sum(Var a) {
  const Tensor& ta = value(a);
  double total = 0.0;
  for (double x : ta.v) total += x;
  return push(Tensor::scalar(total), [a](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < ga.size(); ++i) ga.v[i] += n.grad.v[0];
  });
}

Var Tape::reduce_mean(Var a) {
  const Tensor& ta = value(a);
  double total = 0.0;
  for (double x : ta.v) total += x;
  double inv = 1.0 / (double)ta.size();
  return push(Tensor::scalar(total * inv), [a, inv](Tape& tp, Node& n) {
    Tensor& ga = tp.grad_buf(a);
    for (int64_t i = 0; i < ga.size(); ++i) ga.v[i] += n.grad.v[0] * inv;
  });
}

namespace {

// forward intermediates a fused GRU node keeps for its backward sweep
struct GruSaved {
  Tensor xh, xrh;    // [n, dx+dh]
  Tensor z, r, c;    // [n, dh]
};

}  // namespace

Var Tape::gru(Var x, Var h, Var wz, Var bz, Var wr, Var br, Var wc, Var bc) {
  const Tensor& X = value(x);
  const Tensor& H = value(h);
  const int64_t n = X.rows, dx = X.cols, dh = H.cols;
  require_shape(H.rows == n, "gru batch sizes");
  require_shape(value(wz).rows == dx + dh && value(wz).cols == dh, "gru wz shape");
  require_shape(value(wr).rows == dx + dh && value(wr).cols == dh, "gru wr shape");
  require_shape(value(wc).rows == dx + dh && value(wc).cols == dh, "gru wc shape");
  require_shape(value(bz).rows == 1 && value(bz).cols == dh, "gru bz shape");
  require_shape(value(br).rows == 1 && value(br).cols == dh, "gru br shape");
  require_shape(value(bc).rows == 1 && value(bc).cols == dh, "gru bc shape");

  if (!grad_enabled_) {
    // streaming inference path; scratch is reused across calls and the two
    // gate products share one pass over [x,h]
    thread_local std::vector<double> xh_buf, zr_buf, c_buf, wzr_buf;
    xh_buf.assign(n * (dx + dh), 0.0);
    zr_buf.assign(n * 2 * dh, 0.0);
    c_buf.assign(n * dh, 0.0);
    wzr_buf.resize((dx + dh) * 2 * dh);
    const double* wzv = value(wz).data();
    const double* wrv = value(wr).data();
    for (int64_t p = 0; p < dx + dh; ++p) {
      std::copy(wzv + p * dh, wzv + (p + 1) * dh, wzr_buf.data() + p * 2 * dh);
      std::copy(wrv + p * dh, wrv + (p + 1) * dh, wzr_buf.data() + p * 2 * dh + dh);
    }
    for (int64_t i = 0; i < n; ++i) {
      std::copy(X.data() + i * dx, X.data() + (i + 1) * dx, xh_buf.data() + i * (dx + dh));
      std::copy(H.data() + i * dh, H.data() + (i + 1) * dh, xh_buf.data() + i * (dx + dh) + dx);
    }
    matmul_acc(xh_buf.data(), wzr_buf.data(), zr_buf.data(), n, dx + dh, 2 * dh);
    const double* bzv0 = value(bz).data();
    const double* brv0 = value(br).data();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dh; ++j) {
        zr_buf[i * 2 * dh + j] = stable_sigmoid(zr_buf[i * 2 * dh + j] + bzv0[j]);
        double r = stable_sigmoid(zr_buf[i * 2 * dh + dh + j] + brv0[j]);
        xh_buf[i * (dx + dh) + dx + j] = r * H.at(i, j);  // xh becomes xrh in place
      }
    matmul_acc(xh_buf.data(), value(wc).data(), c_buf.data(), n, dx + dh, dh);
    const double* bcv0 = value(bc).data();
    Tensor out(n, dh);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dh; ++j) {
        double c = std::tanh(c_buf[i * dh + j] + bcv0[j]);
        double z = zr_buf[i * 2 * dh + j];
        out.at(i, j) = H.at(i, j) + z * (c - H.at(i, j));
      }
    return push(std::move(out), {});
  }

  auto saved = std::make_shared<GruSaved>();
  saved->xh = Tensor(n, dx + dh);
  for (int64_t i = 0; i < n; ++i) {
    std::copy(X.data() + i * dx, X.data() + (i + 1) * dx, saved->xh.data() + i * (dx + dh));
    std::copy(H.data() + i * dh, H.data() + (i + 1) * dh,
              saved->xh.data() + i * (dx + dh) + dx);
  }

  saved->z = Tensor(n, dh);
  saved->r = Tensor(n, dh);
  matmul_acc(saved->xh.data(), value(wz).data(), saved->z.data(), n, dx + dh, dh);
  matmul_acc(saved->xh.data(), value(wr).data(), saved->r.data(), n, dx + dh, dh);
  const double* bzv = value(bz).data();
  const double* brv = value(br).data();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < dh; ++j) {
      saved->z.at(i, j) = stable_sigmoid(saved->z.at(i, j) + bzv[j]);
      saved->r.at(i, j) = stable_sigmoid(saved->r.at(i, j) + brv[j]);
    }

  saved->xrh = saved->xh;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < dh; ++j)
      saved->xrh.at(i, dx + j) = saved->r.at(i, j) * H.at(i, j);

  saved->c = Tensor(n, dh);
  matmul_acc(saved->xrh.data(), value(wc).data(), saved->c.data(), n, dx + dh, dh);
  const double* bcv = value(bc).data();
  Tensor out(n, dh);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < dh; ++j) {
      double c = std::tanh(saved->c.at(i, j) + bcv[j]);
      saved->c.at(i, j) = c;
      double z = saved->z.at(i, j);
      out.at(i, j) = H.at(i, j) + z * (c - H.at(i, j));
    }

  return push(std::move(out), [x, h, wz, bz, wr, br, wc, bc, saved, n, dx, dh](Tape& tp,
                                                                               Node& node) {
    const Tensor& G = node.grad;
    const Tensor& H = tp.value(h);
    Tensor dz_pre(n, dh), dr_pre(n, dh), dc_pre(n, dh);
    Tensor& gh = tp.grad_buf(h);

    // local gate gradients; dh accumulates the direct (1-z) path here and
    // the r-gated and xh paths below
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dh; ++j) {
        double g = G.at(i, j);
        double z = saved->z.at(i, j), c = saved->c.at(i, j);
        double hij = H.at(i, j);
        dz_pre.at(i, j) = g * (c - hij) * z * (1.0 - z);
        double dc = g * z;
        dc_pre.at(i, j) = dc * (1.0 - c * c);
        gh.at(i, j) += g * (1.0 - z);
      }

    // candidate path: dxrh = dc_pre wc^T; its h block is gated by r
    Tensor dxrh(n, dx + dh);
    matmul_bt_acc(dc_pre.data(), tp.value(wc).data(), dxrh.data(), n, dx + dh, dh);
    matmul_at_acc(saved->xrh.data(), dc_pre.data(), tp.grad_buf(wc).data(), n, dx + dh, dh);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dh; ++j) {
        double d_rh = dxrh.at(i, dx + j);
        double r = saved->r.at(i, j);
        dr_pre.at(i, j) = d_rh * H.at(i, j) * r * (1.0 - r);
        gh.at(i, j) += d_rh * r;
      }

    // gate pre-activations flow back through both [x,h] products
    Tensor dxh(n, dx + dh);
    matmul_bt_acc(dz_pre.data(), tp.value(wz).data(), dxh.data(), n, dx + dh, dh);
    matmul_bt_acc(dr_pre.data(), tp.value(wr).data(), dxh.data(), n, dx + dh, dh);
    matmul_at_acc(saved->xh.data(), dz_pre.data(), tp.grad_buf(wz).data(), n, dx + dh, dh);
    matmul_at_acc(saved->xh.data(), dr_pre.data(), tp.grad_buf(wr).data(), n, dx + dh, dh);

    Tensor& gx = tp.grad_buf(x);
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < dx; ++j) gx.at(i, j) += dxh.at(i, j) + dxrh.at(i, j);
      for (int64_t j = 0; j < dh; ++j) gh.at(i, j) += dxh.at(i, dx + j);
    }

    Tensor& gbz = tp.grad_buf(bz);
    Tensor& gbr = tp.grad_buf(br);
    Tensor& gbc = tp.grad_buf(bc);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dh; ++j) {
        gbz.v[j] += dz_pre.at(i, j);
        gbr.v[j] += dr_pre.at(i, j);
        gbc.v[j] += dc_pre.at(i, j);
      }
  });
}

void Tape::backward(Var loss) {
  if (!grad_enabled_) throw std::logic_error("backward() on a gradient-disabled tape");
  if (!loss.valid()) fail(Errc::NotScalarLoss, "invalid loss handle");
  Node& ln = nodes_[loss.id];
  if (ln.value.size() != 1) fail(Errc::NotScalarLoss, "loss must be a scalar");
  grad_buf(loss).v[0] = 1.0;
  for (int32_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.grad.size() != 0) n.back(*this, n);
  }
}

}  // namespace netmod::diff
