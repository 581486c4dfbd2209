#include "mdcsa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mdcsa {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Average ranks (1-based) of a value vector, ties averaged.
std::vector<double> average_ranks(const std::vector<double>& v) {
  std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

std::optional<WilcoxonResult> wilcoxon_signed_rank(
    const std::vector<std::pair<double, double>>& pairs, Alternative alternative) {
  if (pairs.empty()) throw std::invalid_argument("no pairs");
  std::vector<double> diffs;
  for (const auto& [a, b] : pairs) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("NaN in pairs");
    double d = a - b;
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) return std::nullopt;

  std::size_t n = diffs.size();
  std::vector<double> abs_diffs(n);
  for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = average_ranks(abs_diffs);

  WilcoxonResult res;
  res.n = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) res.w += ranks[i];
  }

  double nn = static_cast<double>(n);
  double mean_w = nn * (nn + 1.0) / 4.0;
  double var_w = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  // Tie correction: subtract sum(t^3 - t)/48 over tie groups of |d|.
  std::sort(abs_diffs.begin(), abs_diffs.end());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_diffs[j + 1] == abs_diffs[i]) ++j;
    double t = static_cast<double>(j - i + 1);
    var_w -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  double sd = std::sqrt(var_w);
  if (sd <= 0.0) return std::nullopt;  // all |d| tied at one value with n too small

  double centered = res.w - mean_w;
  switch (alternative) {
    case Alternative::TwoSided: {
      double cc = centered > 0.0 ? -0.5 : (centered < 0.0 ? 0.5 : 0.0);
      res.z = (centered + cc) / sd;
      res.p = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(res.z))));
      break;
    }
    case Alternative::Greater:
      res.z = (centered - 0.5) / sd;
      res.p = 1.0 - normal_cdf(res.z);
      break;
    case Alternative::Less:
      res.z = (centered + 0.5) / sd;
      res.p = normal_cdf(res.z);
      break;
  }
  return res;
}

// Regularized lower incomplete gamma via series (x < a+1) or continued
// fraction (otherwise).
double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int it = 0; it < 500; ++it) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int it = 1; it < 500; ++it) {
    double an = -it * (it - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& matrix) {
  if (matrix.size() < 2) throw std::invalid_argument("Friedman needs at least 2 folds");
  std::size_t k = matrix.front().size();
  if (k < 2) throw std::invalid_argument("Friedman needs at least 2 models");
  for (const auto& row : matrix) {
    if (row.size() != k) throw std::invalid_argument("ragged score matrix");
  }
  double N = static_cast<double>(matrix.size());
  double K = static_cast<double>(k);

  std::vector<double> rank_sum(k, 0.0);
  for (const auto& row : matrix) {
    std::vector<double> ranks = average_ranks(row);
    for (std::size_t j = 0; j < k; ++j) rank_sum[j] += ranks[j];
  }
  double stat = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double mean_rank = rank_sum[j] / N;
    double d = mean_rank - (K + 1.0) / 2.0;
    stat += d * d;
  }
  stat *= 12.0 * N / (K * (K + 1.0));

  FriedmanResult res;
  res.statistic = stat;
  res.p = 1.0 - gamma_p((K - 1.0) / 2.0, stat / 2.0);
  return res;
}

std::vector<HolmDecision> holm_correction(const std::vector<double>& p_values,
                                          double alpha) {
  std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-values must be in [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  std::vector<HolmDecision> out(m);
  bool rejecting = true;
  double running_adj = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t idx = order[i];
    double p = p_values[idx];
    double threshold = alpha / static_cast<double>(m - i);
    if (rejecting && p > threshold) rejecting = false;
    running_adj = std::max(running_adj, std::min(1.0, static_cast<double>(m - i) * p));
    out[idx] = {idx, p, running_adj, rejecting};
  }
  return out;
}

RankDiagram critical_difference_ranks(const std::vector<std::vector<double>>& matrix,
                                      const std::vector<std::vector<bool>>& significant) {
  std::size_t k = matrix.empty() ? 0 : matrix.front().size();
  if (k == 0 || significant.size() != k) {
    throw std::invalid_argument("matrix/decision shape mismatch");
  }
  RankDiagram diagram;
  diagram.average_rank.assign(k, 0.0);
  for (const auto& row : matrix) {
    std::vector<double> ranks = average_ranks(row);
    for (std::size_t j = 0; j < k; ++j) diagram.average_rank[j] += ranks[j];
  }
  for (double& r : diagram.average_rank) r /= static_cast<double>(matrix.size());

  // Maximal cliques of the non-significance graph by subset enumeration
  // (model counts here are tiny).
  auto compatible = [&](unsigned mask) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!(mask & (1u << i))) continue;
      for (std::size_t j = i + 1; j < k; ++j) {
        if ((mask & (1u << j)) && significant[i][j]) return false;
      }
    }
    return true;
  };
  std::vector<unsigned> cliques;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    if (!compatible(mask)) continue;
    bool maximal = true;
    for (std::size_t j = 0; j < k; ++j) {
      if (!(mask & (1u << j)) && compatible(mask | (1u << j))) {
        maximal = false;
        break;
      }
    }
    if (maximal) cliques.push_back(mask);
  }
  for (unsigned mask : cliques) {
    std::vector<int> members;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (1u << j)) members.push_back(static_cast<int>(j));
    }
    diagram.cliques.push_back(std::move(members));
  }
  return diagram;
}

std::string render_rank_diagram(const RankDiagram& diagram,
                                const std::vector<std::string>& model_names) {
  std::size_t k = diagram.average_rank.size();
  if (model_names.size() != k) throw std::invalid_argument("name count mismatch");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return diagram.average_rank[a] < diagram.average_rank[b];
  });

  std::ostringstream out;
  char buf[64];
  for (std::size_t pos = 0; pos < k; ++pos) {
    std::size_t j = order[pos];
    std::snprintf(buf, sizeof(buf), "%6.3f", diagram.average_rank[j]);
    out << buf << "  " << model_names[j] << '\n';
  }
  for (std::size_t c = 0; c < diagram.cliques.size(); ++c) {
    if (diagram.cliques[c].size() < 2) continue;
    out << "clique " << c << ": ";
    for (std::size_t i = 0; i < diagram.cliques[c].size(); ++i) {
      if (i) out << " == ";
      out << model_names[static_cast<std::size_t>(diagram.cliques[c][i])];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mdcsa
