#pragma once

#include <string>
#include <vector>

namespace netmod::eval {

struct MetricReport {
  double mape = 0.0;  // over entries with nonzero truth
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double w1 = 0.0;  // 1-Wasserstein over sorted values, normalized by mean truth
  int64_t n = 0;
  int64_t n_mape = 0;  // entries that contributed to MAPE
  std::string target;
};

MetricReport compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

}  // namespace netmod::eval
