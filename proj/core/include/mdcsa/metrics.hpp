#pragma once

#include <vector>

namespace mdcsa {

struct WeightedMetrics {
  double precision = 0.0;
  double f1 = 0.0;
};

/// Support-weighted precision and F1 over integer class labels. Classes
/// absent from the truth contribute zero weight.
WeightedMetrics weighted_metrics(const std::vector<int>& predictions,
                                 const std::vector<int>& truth);

/// Rank-statistic AUROC with average ranks for ties. Returns nullopt-like
/// NaN when only one class is present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);  // population sd

}  // namespace mdcsa
