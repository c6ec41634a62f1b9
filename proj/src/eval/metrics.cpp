#include "netmod/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netmod/core/error.hpp"

namespace netmod::eval {

MetricReport compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size()) fail(Errc::LengthMismatch, "prediction/truth length mismatch");
  if (pred.empty()) fail(Errc::LengthMismatch, "empty metric input");

  MetricReport r;
  r.n = (int64_t)pred.size();
  double mean_t = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) mean_t += truth[i];
  mean_t /= (double)truth.size();

  double ss_res = 0.0, ss_tot = 0.0, mape_sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double e = pred[i] - truth[i];
    r.mse += e * e;
    r.mae += std::abs(e);
    ss_res += e * e;
    ss_tot += (truth[i] - mean_t) * (truth[i] - mean_t);
    if (truth[i] != 0.0) {
      mape_sum += std::abs(e) / std::abs(truth[i]);
      ++r.n_mape;
    }
  }
  r.mse /= (double)r.n;
  r.mae /= (double)r.n;
  // MAPE is undefined where truth is zero; those entries are skipped and,
  // when nothing remains, reported as absent
  r.mape = r.n_mape > 0 ? mape_sum / (double)r.n_mape
                        : std::numeric_limits<double>::quiet_NaN();
  r.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());

  std::vector<double> p = pred, t = truth;
  std::sort(p.begin(), p.end());
  std::sort(t.begin(), t.end());
  double w1 = 0.0;
  for (size_t i = 0; i < p.size(); ++i) w1 += std::abs(p[i] - t[i]);
  w1 /= (double)p.size();
  r.w1 = mean_t != 0.0 ? w1 / mean_t : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace netmod::eval
