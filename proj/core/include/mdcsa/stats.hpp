#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mdcsa {

enum class Alternative { TwoSided, Greater, Less };

struct WilcoxonResult {
  double w = 0.0;  // sum of positive-difference ranks
  double z = 0.0;  // normal approximation, continuity-corrected
  double p = 1.0;
  int n = 0;       // pairs retained after dropping zero differences
};

/// Wilcoxon signed-rank test on paired values (difference = a - b). Zero
/// differences are dropped; ties get average ranks; the variance is
/// tie-corrected. Returns nullopt when every difference is zero. NaNs are
/// rejected. "Greater" tests whether a tends to exceed b.
std::optional<WilcoxonResult> wilcoxon_signed_rank(
    const std::vector<std::pair<double, double>>& pairs,
    Alternative alternative = Alternative::TwoSided);

struct FriedmanResult {
  double statistic = 0.0;  // chi-square, k-1 degrees of freedom
  double p = 1.0;
};

/// Friedman test on a folds x models score matrix (within-fold average ranks).
FriedmanResult friedman_test(const std::vector<std::vector<double>>& matrix);

struct HolmDecision {
  std::size_t index = 0;    // position in the input vector
  double p = 1.0;
  double adjusted_p = 1.0;  // monotone step-down adjustment, clamped to 1
  bool reject = false;
};

/// Holm step-down correction; decisions returned in input order.
std::vector<HolmDecision> holm_correction(const std::vector<double>& p_values,
                                          double alpha = 0.05);

struct RankDiagram {
  std::vector<double> average_rank;        // per model, in [1, n_models]
  std::vector<std::vector<int>> cliques;   // maximal mutually non-significant sets
};

/// Average ranks over folds plus maximal cliques of the pairwise
/// non-significance relation. significant[i][j] = true when models i and j
/// differ significantly (symmetric, diagonal ignored).
RankDiagram critical_difference_ranks(const std::vector<std::vector<double>>& matrix,
                                      const std::vector<std::vector<bool>>& significant);

/// Text rendering of a rank diagram (one line per model, clique bars).
std::string render_rank_diagram(const RankDiagram& diagram,
                                const std::vector<std::string>& model_names);

/// Regularized lower incomplete gamma P(a, x); exposed for oracle tests.
double gamma_p(double a, double x);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace mdcsa
