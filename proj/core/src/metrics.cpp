#include "mdcsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mdcsa {

WeightedMetrics weighted_metrics(const std::vector<int>& predictions,
                                 const std::vector<int>& truth) {
  if (predictions.empty() || predictions.size() != truth.size()) {
    throw std::invalid_argument("predictions/truth must be equal-length and non-empty");
  }
  std::map<int, int> support;        // class -> truth count
  std::map<int, int> pred_count;     // class -> predicted count
  std::map<int, int> true_positive;  // class -> hits
  for (std::size_t i = 0; i < truth.size(); ++i) {
    support[truth[i]]++;
    pred_count[predictions[i]]++;
    if (predictions[i] == truth[i]) true_positive[truth[i]]++;
  }
  double n = static_cast<double>(truth.size());
  WeightedMetrics wm;
  for (const auto& [cls, sup] : support) {
    int tp = true_positive.count(cls) ? true_positive[cls] : 0;
    int pc = pred_count.count(cls) ? pred_count[cls] : 0;
    double precision = pc > 0 ? static_cast<double>(tp) / pc : 0.0;
    double recall = static_cast<double>(tp) / sup;
    double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    double w = sup / n;
    wm.precision += w * precision;
    wm.f1 += w * f1;
  }
  return wm;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("scores/labels must be equal-length and non-empty");
  }
  std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over ties.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }

  double n_pos = 0.0, n_neg = 0.0, rank_sum_pos = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] != 0) {
      n_pos += 1.0;
      rank_sum_pos += rank[k];
    } else {
      n_neg += 1.0;
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();  // single-class test set
  }
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace mdcsa
