#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "mdcsa/metrics.hpp"

using namespace mdcsa;

TEST_CASE("weighted f1 on the worked two-class example") {
  // truth [A,A,B,B], pred [A,B,B,B]: class A has P=1, R=0.5, F1=2/3;
  // class B has P=2/3, R=1, F1=0.8; supports are equal, so the weighted
  // F1 is (2/3 + 0.8) / 2 = 0.7333...
  auto m = weighted_metrics({0, 1, 1, 1}, {0, 0, 1, 1});
  CHECK(m.f1 == doctest::Approx(0.73333333333).epsilon(1e-9));
  CHECK(m.precision == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
}

TEST_CASE("perfect and degenerate predictions") {
  auto perfect = weighted_metrics({2, 0, 1, 2}, {2, 0, 1, 2});
  CHECK(perfect.precision == doctest::Approx(1.0));
  CHECK(perfect.f1 == doctest::Approx(1.0));

  // All-wrong single-class predictions.
  auto wrong = weighted_metrics({1, 1, 1}, {0, 0, 0});
  CHECK(wrong.f1 == doctest::Approx(0.0));
  CHECK(wrong.precision == doctest::Approx(0.0));
}

TEST_CASE("classes absent from the truth carry no weight") {
  // Prediction of an unseen class hurts precision of nothing but recall of
  // the true class; the unseen class itself has zero support weight.
  auto m = weighted_metrics({0, 5, 0}, {0, 0, 0});
  // Class 0: P = 1, R = 2/3, F1 = 0.8; class 5 weight 0.
  CHECK(m.f1 == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(m.precision == doctest::Approx(1.0));
}

TEST_CASE("auroc on the worked example") {
  // scores [.9,.8,.4,.2], labels [1,0,1,0]: one of four positive/negative
  // pairs is misordered -> AUROC = 0.75.
  CHECK(auroc({0.9, 0.8, 0.4, 0.2}, {1, 0, 1, 0}) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auroc limits and tie handling") {
  CHECK(auroc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(auroc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == doctest::Approx(0.0));
  // All scores tied: every pair counts half.
  CHECK(auroc({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}) == doctest::Approx(0.5));
  // Single class present: undefined.
  CHECK(std::isnan(auroc({0.1, 0.9}, {1, 1})));
}

TEST_CASE("auroc is invariant under monotone score transforms") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) {
    scores.push_back(unit(rng));
    labels.push_back(rng() % 2 ? 1 : 0);
  }
  double base = auroc(scores, labels);

  std::vector<double> squashed;
  for (double s : scores) squashed.push_back(std::tanh(3.0 * s) + 10.0);
  CHECK(auroc(squashed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auroc equals the pair-counting definition") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> coarse(0, 5);  // force ties
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
      scores.push_back(static_cast<double>(coarse(rng)));
      labels.push_back(rng() % 3 == 0 ? 1 : 0);
    }
    int pos = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
    if (pos == 0 || pos == 30) continue;

    double wins = 0.0;
    long pairs = 0;
    for (int i = 0; i < 30; ++i) {
      if (labels[i] != 1) continue;
      for (int j = 0; j < 30; ++j) {
        if (labels[j] != 0) continue;
        ++pairs;
        if (scores[i] > scores[j]) wins += 1.0;
        else if (scores[i] == scores[j]) wins += 0.5;
      }
    }
    CHECK(auroc(scores, labels) ==
          doctest::Approx(wins / static_cast<double>(pairs)).epsilon(1e-12));
  }
}

TEST_CASE("mean and population standard deviation") {
  CHECK(mean({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(2.5));
  CHECK(stddev({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) == doctest::Approx(2.0));
  CHECK(stddev({5.0}) == doctest::Approx(0.0));
}
