#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "mdcsa/stats.hpp"

using namespace mdcsa;

TEST_CASE("wilcoxon on the worked three-pair example") {
  // Differences 2, 3, -2: |d| ranks 1.5, 3, 1.5 -> W = 4.5.
  auto r = wilcoxon_signed_rank({{3.0, 1.0}, {5.0, 2.0}, {4.0, 6.0}});
  REQUIRE(r.has_value());
  CHECK(r->w == doctest::Approx(4.5));
  CHECK(r->n == 3);
  // mean = 3, tie-corrected var = 3.5 - 0.125 = 3.375, continuity-corrected
  // z = (4.5 - 3 - 0.5) / sqrt(3.375).
  CHECK(r->z == doctest::Approx((4.5 - 3.0 - 0.5) / std::sqrt(3.375)).epsilon(1e-9));
  CHECK(r->p == doctest::Approx(2.0 * (1.0 - normal_cdf(r->z))).epsilon(1e-12));
  CHECK(r->p == doctest::Approx(0.58629).epsilon(1e-3));
}

TEST_CASE("zero differences are dropped and all-zero input is undefined") {
  auto r = wilcoxon_signed_rank({{1.0, 1.0}, {3.0, 1.0}, {5.0, 2.0}, {4.0, 6.0}});
  REQUIRE(r.has_value());
  CHECK(r->n == 3);
  CHECK(r->w == doctest::Approx(4.5));

  CHECK(!wilcoxon_signed_rank({{2.0, 2.0}, {7.0, 7.0}}).has_value());
}

TEST_CASE("nan inputs are rejected") {
  double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(wilcoxon_signed_rank({{nan, 1.0}, {2.0, 1.0}}));
  CHECK_THROWS(wilcoxon_signed_rank({}));
}

TEST_CASE("one-sided alternatives are antisymmetric under swapping") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<double, double>> ab, ba;
    int n = 6 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      double a = noise(rng), b = noise(rng) + 0.3;
      ab.push_back({a, b});
      ba.push_back({b, a});
    }
    auto greater = wilcoxon_signed_rank(ab, Alternative::Greater);
    auto less = wilcoxon_signed_rank(ba, Alternative::Less);
    if (!greater.has_value()) continue;
    REQUIRE(less.has_value());
    CHECK(greater->p == doctest::Approx(less->p).epsilon(1e-12));

    // Two-sided p is bounded by twice the smaller one-sided p.
    auto two = wilcoxon_signed_rank(ab, Alternative::TwoSided);
    auto less_ab = wilcoxon_signed_rank(ab, Alternative::Less);
    CHECK(two->p <= 2.0 * std::min(greater->p, less_ab->p) + 1e-9);
  }
}

TEST_CASE("a strong one-sided effect gives a small p") {
  std::vector<std::pair<double, double>> pairs;
  for (int i = 1; i <= 12; ++i) {
    pairs.push_back({static_cast<double>(i) + 5.0, static_cast<double>(i)});
  }
  auto r = wilcoxon_signed_rank(pairs, Alternative::Greater);
  REQUIRE(r.has_value());
  CHECK(r->p < 0.01);
  auto wrong_side = wilcoxon_signed_rank(pairs, Alternative::Less);
  CHECK(wrong_side->p > 0.99);
}

TEST_CASE("gamma_p matches closed forms") {
  for (double x : {0.1, 0.5, 1.0, 2.5, 6.0, 20.0}) {
    CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-10));
    CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-10));
  }
  CHECK(gamma_p(3.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("normal cdf reference points") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.1586553).epsilon(1e-6));
}

TEST_CASE("friedman statistic is zero for identical columns") {
  std::vector<std::vector<double>> matrix(5, {0.7, 0.7, 0.7});
  auto r = friedman_test(matrix);
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p == doctest::Approx(1.0));
}

TEST_CASE("friedman on a consistent ordering matches the closed form") {
  // Ranks 1, 2, 3 in every one of 6 folds: stat = 2N = 12; with df = 2 the
  // survival function is exp(-stat / 2).
  std::vector<std::vector<double>> matrix;
  for (int f = 0; f < 6; ++f) matrix.push_back({0.1, 0.5, 0.9});
  auto r = friedman_test(matrix);
  CHECK(r.statistic == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(std::exp(-6.0)).epsilon(1e-9));
}

TEST_CASE("friedman input validation") {
  CHECK_THROWS(friedman_test({}));
  CHECK_THROWS(friedman_test({{0.1, 0.2}}));            // one fold
  CHECK_THROWS(friedman_test({{0.1}, {0.2}}));          // one model
  CHECK_THROWS(friedman_test({{0.1, 0.2}, {0.3}}));     // ragged
}

TEST_CASE("holm rejects all of a graded set and none of a flat one") {
  auto all = holm_correction({0.01, 0.02, 0.04}, 0.05);
  REQUIRE(all.size() == 3);
  for (const auto& d : all) CHECK(d.reject);
  CHECK(all[0].adjusted_p == doctest::Approx(0.03));
  CHECK(all[1].adjusted_p == doctest::Approx(0.04));
  CHECK(all[2].adjusted_p == doctest::Approx(0.04));  // monotone clamp

  auto none = holm_correction({0.04, 0.04, 0.04}, 0.05);
  for (const auto& d : none) CHECK(!d.reject);
  for (const auto& d : none) CHECK(d.adjusted_p == doctest::Approx(0.12));
}

TEST_CASE("holm stops at the first failure and keeps input order") {
  auto ds = holm_correction({0.5, 0.001, 0.03}, 0.05);
  REQUIRE(ds.size() == 3);
  CHECK(ds[0].index == 0);
  CHECK(ds[1].index == 1);
  CHECK(ds[2].index == 2);
  CHECK(ds[1].reject);        // 0.001 < 0.05/3
  CHECK(!ds[2].reject);       // 0.03 > 0.05/2 stops the chain
  CHECK(!ds[0].reject);
  // Adjusted ps never decrease along the sorted order.
  CHECK(ds[1].adjusted_p <= ds[2].adjusted_p);
  CHECK(ds[2].adjusted_p <= ds[0].adjusted_p);
}

TEST_CASE("rank diagram ranks and cliques") {
  // Model 2 always best (rank 3 with ascending ranks = highest scores),
  // model 0 always worst.
  std::vector<std::vector<double>> matrix;
  for (int f = 0; f < 4; ++f) matrix.push_back({0.1, 0.5, 0.9});
  // 0 and 1 are indistinguishable; 2 differs from both.
  std::vector<std::vector<bool>> sig{{false, false, true},
                                     {false, false, true},
                                     {true, true, false}};
  auto d = critical_difference_ranks(matrix, sig);
  REQUIRE(d.average_rank.size() == 3);
  CHECK(d.average_rank[0] == doctest::Approx(1.0));
  CHECK(d.average_rank[1] == doctest::Approx(2.0));
  CHECK(d.average_rank[2] == doctest::Approx(3.0));

  REQUIRE(d.cliques.size() == 2);
  std::vector<std::vector<int>> want{{0, 1}, {2}};
  for (auto& c : d.cliques) std::sort(c.begin(), c.end());
  std::sort(d.cliques.begin(), d.cliques.end());
  CHECK(d.cliques == want);

  auto text = render_rank_diagram(d, {"A", "B", "C"});
  CHECK(text.find("A") != std::string::npos);
  CHECK(text.find("C") != std::string::npos);
}

TEST_CASE("a fully non-significant graph is one clique") {
  std::vector<std::vector<double>> matrix{{0.2, 0.4, 0.6}, {0.3, 0.2, 0.9}};
  std::vector<std::vector<bool>> sig(3, std::vector<bool>(3, false));
  auto d = critical_difference_ranks(matrix, sig);
  REQUIRE(d.cliques.size() == 1);
  CHECK(d.cliques[0].size() == 3);
}
