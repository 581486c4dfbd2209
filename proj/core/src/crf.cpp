#include "mdcsa/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdcsa {

namespace {

double logsumexp(const std::vector<double>& v) {
  double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_inputs(const Matrix& emissions, const std::vector<int>& gold,
                  const TransitionMatrix& trans, bool with_gold) {
  int T = emissions.rows, m = emissions.cols;
  if (T < 1) throw std::invalid_argument("need T >= 1");
  if (trans.num_labels() != m) throw std::invalid_argument("transition/emission label mismatch");
  if (with_gold) {
    if (static_cast<int>(gold.size()) != T) throw std::invalid_argument("gold length mismatch");
    for (int y : gold) {
      if (y < 0 || y >= m) throw std::invalid_argument("gold label out of range");
    }
  }
}

// alpha[t][y]: log sum of scores of all prefixes ending in y at t.
Matrix forward_lattice(const Matrix& e, const TransitionMatrix& trans) {
  int T = e.rows, m = e.cols;
  Matrix alpha(T, m);
  for (int y = 0; y < m; ++y) alpha(0, y) = trans.start(0, y) + e(0, y);
  std::vector<double> buf(static_cast<std::size_t>(m));
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < m; ++y) {
      for (int p = 0; p < m; ++p) buf[static_cast<std::size_t>(p)] = alpha(t - 1, p) + trans.scores(p, y);
      alpha(t, y) = logsumexp(buf) + e(t, y);
    }
  }
  return alpha;
}

// beta[t][y]: log sum of scores of all suffixes starting after (t, y).
Matrix backward_lattice(const Matrix& e, const TransitionMatrix& trans) {
  int T = e.rows, m = e.cols;
  Matrix beta(T, m);
  std::vector<double> buf(static_cast<std::size_t>(m));
  for (int t = T - 2; t >= 0; --t) {
    for (int y = 0; y < m; ++y) {
      for (int nx = 0; nx < m; ++nx) {
        buf[static_cast<std::size_t>(nx)] = trans.scores(y, nx) + e(t + 1, nx) + beta(t + 1, nx);
      }
      beta(t, y) = logsumexp(buf);
    }
  }
  return beta;
}

double gold_score(const Matrix& e, const std::vector<int>& gold,
                  const TransitionMatrix& trans) {
  double s = trans.start(0, gold[0]) + e(0, gold[0]);
  for (int t = 1; t < e.rows; ++t) {
    s += trans.scores(gold[static_cast<std::size_t>(t - 1)], gold[static_cast<std::size_t>(t)]) +
         e(t, gold[static_cast<std::size_t>(t)]);
  }
  return s;
}

}  // namespace

double crf_negative_log_likelihood(const Matrix& emissions,
                                   const std::vector<int>& gold,
                                   const TransitionMatrix& trans) {
  check_inputs(emissions, gold, trans, true);
  Matrix alpha = forward_lattice(emissions, trans);
  int T = emissions.rows, m = emissions.cols;
  std::vector<double> last(static_cast<std::size_t>(m));
  for (int y = 0; y < m; ++y) last[static_cast<std::size_t>(y)] = alpha(T - 1, y);
  return logsumexp(last) - gold_score(emissions, gold, trans);
}

double crf_log_partition_backward(const Matrix& emissions,
                                  const TransitionMatrix& trans) {
  check_inputs(emissions, {}, trans, false);
  Matrix beta = backward_lattice(emissions, trans);
  int m = emissions.cols;
  std::vector<double> first(static_cast<std::size_t>(m));
  for (int y = 0; y < m; ++y) {
    first[static_cast<std::size_t>(y)] = trans.start(0, y) + emissions(0, y) + beta(0, y);
  }
  return logsumexp(first);
}

std::pair<std::vector<int>, double> viterbi_decode(const Matrix& emissions,
                                                   const TransitionMatrix& trans) {
  check_inputs(emissions, {}, trans, false);
  int T = emissions.rows, m = emissions.cols;
  Matrix delta(T, m);
  std::vector<std::vector<int>> back(static_cast<std::size_t>(T),
                                     std::vector<int>(static_cast<std::size_t>(m), 0));
  for (int y = 0; y < m; ++y) delta(0, y) = trans.start(0, y) + emissions(0, y);
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < m; ++y) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int p = 0; p < m; ++p) {
        double s = delta(t - 1, p) + trans.scores(p, y);
        if (s > best) {  // strict: ties keep the lowest p
          best = s;
          arg = p;
        }
      }
      delta(t, y) = best + emissions(t, y);
      back[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] = arg;
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int y = 0; y < m; ++y) {
    if (delta(T - 1, y) > best) {
      best = delta(T - 1, y);
      arg = y;
    }
  }
  std::vector<int> path(static_cast<std::size_t>(T));
  path[static_cast<std::size_t>(T - 1)] = arg;
  for (int t = T - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] =
        back[static_cast<std::size_t>(t)][static_cast<std::size_t>(path[static_cast<std::size_t>(t)])];
  }
  return {path, best};
}

CrfGradients crf_gradients(const Matrix& emissions, const std::vector<int>& gold,
                           const TransitionMatrix& trans) {
  check_inputs(emissions, gold, trans, true);
  int T = emissions.rows, m = emissions.cols;
  Matrix alpha = forward_lattice(emissions, trans);
  Matrix beta = backward_lattice(emissions, trans);
  std::vector<double> last(static_cast<std::size_t>(m));
  for (int y = 0; y < m; ++y) last[static_cast<std::size_t>(y)] = alpha(T - 1, y);
  double logZ = logsumexp(last);

  CrfGradients g;
  g.d_emissions = Matrix(T, m);
  g.d_scores = Matrix(m, m);
  g.d_start = Matrix(1, m);

  // Unary marginals minus gold indicators.
  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < m; ++y) {
      g.d_emissions(t, y) = std::exp(alpha(t, y) + beta(t, y) - logZ);
    }
    g.d_emissions(t, gold[static_cast<std::size_t>(t)]) -= 1.0;
  }
  // Start marginals.
  for (int y = 0; y < m; ++y) {
    g.d_start(0, y) = std::exp(alpha(0, y) + beta(0, y) - logZ);
  }
  g.d_start(0, gold[0]) -= 1.0;
  // Pairwise marginals.
  for (int t = 1; t < T; ++t) {
    for (int p = 0; p < m; ++p) {
      for (int y = 0; y < m; ++y) {
        g.d_scores(p, y) += std::exp(alpha(t - 1, p) + trans.scores(p, y) +
                                     emissions(t, y) + beta(t, y) - logZ);
      }
    }
    g.d_scores(gold[static_cast<std::size_t>(t - 1)], gold[static_cast<std::size_t>(t)]) -= 1.0;
  }
  return g;
}

ad::VarId crf_nll_op(Tape& tape, ad::VarId emissions, const std::vector<int>& gold,
                     ad::VarId trans_scores, ad::VarId trans_start) {
  TransitionMatrix trans(tape.value(trans_scores).rows);
  trans.scores = tape.value(trans_scores);
  trans.start = tape.value(trans_start);
  double nll = crf_negative_log_likelihood(tape.value(emissions), gold, trans);
  Matrix L(1, 1);
  L(0, 0) = nll;
  auto out = static_cast<ad::VarId>(tape.size());
  return tape.push(std::move(L), [emissions, gold, trans_scores, trans_start, out](Tape& tp) {
    TransitionMatrix tr(tp.value(trans_scores).rows);
    tr.scores = tp.value(trans_scores);
    tr.start = tp.value(trans_start);
    CrfGradients g = crf_gradients(tp.value(emissions), gold, tr);
    double gy = tp.grad(out)(0, 0);
    for (std::size_t i = 0; i < g.d_emissions.size(); ++i) {
      tp.grad(emissions).a[i] += gy * g.d_emissions.a[i];
    }
    for (std::size_t i = 0; i < g.d_scores.size(); ++i) {
      tp.grad(trans_scores).a[i] += gy * g.d_scores.a[i];
    }
    for (std::size_t i = 0; i < g.d_start.size(); ++i) {
      tp.grad(trans_start).a[i] += gy * g.d_start.a[i];
    }
  });
}

}  // namespace mdcsa
