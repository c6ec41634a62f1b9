#pragma once

#include <cstdint>
#include <vector>

#include "netmod/core/error.hpp"

namespace netmod::diff {

// Dense row-major matrix of 64-bit floats. Everything the model needs is
// rank 2; scalars are [1,1].
struct Tensor {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int64_t r, int64_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  static Tensor zeros(int64_t r, int64_t c) { return Tensor(r, c); }
  static Tensor full(int64_t r, int64_t c, double x) {
    Tensor t(r, c);
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
  }
  static Tensor scalar(double x) { return full(1, 1, x); }
  static Tensor row(const std::vector<double>& x) {
    Tensor t(1, (int64_t)x.size());
    t.v = x;
    return t;
  }
  static Tensor column(const std::vector<double>& x) {
    Tensor t((int64_t)x.size(), 1);
    t.v = x;
    return t;
  }

  int64_t size() const { return rows * cols; }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double& at(int64_t r, int64_t c) { return v[r * cols + c]; }
  double at(int64_t r, int64_t c) const { return v[r * cols + c]; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_shape(bool ok, const char* what) {
  if (!ok) fail(Errc::ShapeMismatch, what);
}

}  // namespace netmod::diff
