#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mdcsa/crf.hpp"

using namespace mdcsa;

namespace {

double logsumexp(const std::vector<double>& xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double path_score(const Matrix& emissions, const std::vector<int>& path,
                  const TransitionMatrix& trans) {
  double s = trans.start(0, path[0]) + emissions(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t) {
    s += trans.scores(path[t - 1], path[t]) + emissions(static_cast<int>(t), path[t]);
  }
  return s;
}

// Enumerate all m^T paths.
void all_paths(int T, int m, std::vector<int>& cur,
               const std::function<void(const std::vector<int>&)>& visit) {
  if (static_cast<int>(cur.size()) == T) {
    visit(cur);
    return;
  }
  for (int y = 0; y < m; ++y) {
    cur.push_back(y);
    all_paths(T, m, cur, visit);
    cur.pop_back();
  }
}

double brute_logz(const Matrix& emissions, const TransitionMatrix& trans) {
  std::vector<double> scores;
  std::vector<int> cur;
  all_paths(emissions.rows, trans.num_labels(), cur,
            [&](const std::vector<int>& p) { scores.push_back(path_score(emissions, p, trans)); });
  return logsumexp(scores);
}

TransitionMatrix random_trans(int m, std::mt19937_64& rng) {
  TransitionMatrix trans(m);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : trans.scores.a) v = dist(rng);
  for (auto& v : trans.start.a) v = dist(rng);
  return trans;
}

Matrix random_emissions(int T, int m, std::mt19937_64& rng) {
  Matrix e(T, m);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : e.a) v = dist(rng);
  return e;
}

}  // namespace

TEST_CASE("one step with flat potentials costs log(m)") {
  TransitionMatrix trans(2);  // all zeros
  Matrix emissions(1, 2);     // all zeros
  double nll = crf_negative_log_likelihood(emissions, {0}, trans);
  CHECK(nll == doctest::Approx(std::log(2.0)));
  nll = crf_negative_log_likelihood(emissions, {1}, trans);
  CHECK(nll == doctest::Approx(std::log(2.0)));
}

TEST_CASE("nll matches exhaustive path enumeration") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 2 + static_cast<int>(rng() % 3);
    int T = 1 + static_cast<int>(rng() % 5);
    auto trans = random_trans(m, rng);
    auto emissions = random_emissions(T, m, rng);
    std::vector<int> gold;
    for (int t = 0; t < T; ++t) gold.push_back(static_cast<int>(rng() % m));

    double expect = brute_logz(emissions, trans) - path_score(emissions, gold, trans);
    double got = crf_negative_log_likelihood(emissions, gold, trans);
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("forward and backward recursions agree on the partition") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    int m = 2 + static_cast<int>(rng() % 4);
    int T = 1 + static_cast<int>(rng() % 6);
    auto trans = random_trans(m, rng);
    auto emissions = random_emissions(T, m, rng);

    double fwd = crf_negative_log_likelihood(emissions, std::vector<int>(T, 0), trans) +
                 path_score(emissions, std::vector<int>(T, 0), trans);
    double bwd = crf_log_partition_backward(emissions, trans);
    CHECK(fwd == doctest::Approx(bwd).epsilon(1e-9));
  }
}

TEST_CASE("nll is invariant to a constant shift of one emission row") {
  std::mt19937_64 rng(13);
  auto trans = random_trans(3, rng);
  auto emissions = random_emissions(4, 3, rng);
  std::vector<int> gold{0, 2, 1, 1};
  double base = crf_negative_log_likelihood(emissions, gold, trans);

  for (int j = 0; j < 3; ++j) emissions(2, j) += 7.5;
  CHECK(crf_negative_log_likelihood(emissions, gold, trans) ==
        doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("viterbi finds the argmax path") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 2 + static_cast<int>(rng() % 3);
    int T = 1 + static_cast<int>(rng() % 5);
    auto trans = random_trans(m, rng);
    auto emissions = random_emissions(T, m, rng);

    double best = -1e300;
    std::vector<int> best_path;
    std::vector<int> cur;
    all_paths(T, m, cur, [&](const std::vector<int>& p) {
      double s = path_score(emissions, p, trans);
      if (s > best + 1e-12) {
        best = s;
        best_path = p;
      }
    });

    auto [path, score] = viterbi_decode(emissions, trans);
    CHECK(score == doctest::Approx(best).epsilon(1e-9));
    CHECK(path == best_path);
  }
}

TEST_CASE("viterbi breaks exact ties toward the lowest label") {
  TransitionMatrix trans(3);  // all-zero potentials: every path ties
  Matrix emissions(4, 3);
  auto [path, score] = viterbi_decode(emissions, trans);
  CHECK(path == std::vector<int>({0, 0, 0, 0}));
  CHECK(score == doctest::Approx(0.0));
}

TEST_CASE("analytic crf gradients match finite differences") {
  std::mt19937_64 rng(15);
  int m = 3, T = 5;
  auto trans = random_trans(m, rng);
  auto emissions = random_emissions(T, m, rng);
  std::vector<int> gold{0, 1, 2, 1, 0};

  auto grads = crf_gradients(emissions, gold, trans);
  REQUIRE(grads.d_emissions.rows == T);
  REQUIRE(grads.d_scores.rows == m);

  const double h = 1e-6;
  auto fd = [&](double* slot) {
    double keep = *slot;
    *slot = keep + h;
    double hi = crf_negative_log_likelihood(emissions, gold, trans);
    *slot = keep - h;
    double lo = crf_negative_log_likelihood(emissions, gold, trans);
    *slot = keep;
    return (hi - lo) / (2.0 * h);
  };

  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < m; ++j) {
      CHECK(fd(&emissions(t, j)) == doctest::Approx(grads.d_emissions(t, j)).epsilon(1e-5));
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      CHECK(fd(&trans.scores(i, j)) == doctest::Approx(grads.d_scores(i, j)).epsilon(1e-5));
    }
  }
  for (int j = 0; j < m; ++j) {
    CHECK(fd(&trans.start(0, j)) == doctest::Approx(grads.d_start(0, j)).epsilon(1e-5));
  }
}

TEST_CASE("the tape op reproduces the standalone nll and gradients") {
  std::mt19937_64 rng(16);
  int m = 4, T = 6;
  auto trans = random_trans(m, rng);
  auto emissions = random_emissions(T, m, rng);
  std::vector<int> gold{3, 0, 1, 1, 2, 0};

  Tape tape;
  auto e = tape.leaf(emissions);
  auto s = tape.leaf(trans.scores);
  auto st = tape.leaf(trans.start);
  auto nll = crf_nll_op(tape, e, gold, s, st);
  tape.backward(nll);

  CHECK(tape.value(nll)(0, 0) ==
        doctest::Approx(crf_negative_log_likelihood(emissions, gold, trans)).epsilon(1e-10));

  auto grads = crf_gradients(emissions, gold, trans);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < m; ++j) {
      CHECK(tape.grad(e)(t, j) == doctest::Approx(grads.d_emissions(t, j)).epsilon(1e-10));
    }
  }
  for (std::size_t i = 0; i < grads.d_scores.a.size(); ++i) {
    CHECK(tape.grad(s).a[i] == doctest::Approx(grads.d_scores.a[i]).epsilon(1e-10));
  }
  for (std::size_t i = 0; i < grads.d_start.a.size(); ++i) {
    CHECK(tape.grad(st).a[i] == doctest::Approx(grads.d_start.a[i]).epsilon(1e-10));
  }
}

TEST_CASE("degenerate inputs are rejected") {
  TransitionMatrix trans(3);
  Matrix emissions(2, 3);
  CHECK_THROWS(crf_negative_log_likelihood(emissions, {0}, trans));       // length mismatch
  CHECK_THROWS(crf_negative_log_likelihood(emissions, {0, 5}, trans));    // label out of range
  CHECK_THROWS(crf_negative_log_likelihood(Matrix(0, 3), {}, trans));     // empty sequence
}
