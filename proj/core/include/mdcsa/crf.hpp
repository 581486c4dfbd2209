#pragma once

#include <utility>
#include <vector>

#include "mdcsa/autodiff.hpp"

namespace mdcsa {

/// Linear-chain CRF potentials: transition scores (from x to) plus learned
/// start scores. No end scores: windows are arbitrary slices of a day.
struct TransitionMatrix {
  Matrix scores;  // m x m
  Matrix start;   // 1 x m

  explicit TransitionMatrix(int m = 0) : scores(m, m), start(1, m) {}
  int num_labels() const { return scores.rows; }
};

/// Negative log-likelihood: logZ - score(gold). logZ via the log-domain
/// forward algorithm.
double crf_negative_log_likelihood(const Matrix& emissions,
                                   const std::vector<int>& gold,
                                   const TransitionMatrix& trans);

/// Best-scoring path; ties broken toward the lowest label index.
std::pair<std::vector<int>, double> viterbi_decode(const Matrix& emissions,
                                                   const TransitionMatrix& trans);

struct CrfGradients {
  Matrix d_emissions;  // T x m
  Matrix d_scores;     // m x m
  Matrix d_start;      // 1 x m
};

/// Expected feature counts under the model (forward-backward marginals)
/// minus gold indicator counts.
CrfGradients crf_gradients(const Matrix& emissions, const std::vector<int>& gold,
                           const TransitionMatrix& trans);

/// Log-partition computed by the backward recursion; equals the forward
/// logZ and serves as an independent cross-check.
double crf_log_partition_backward(const Matrix& emissions,
                                  const TransitionMatrix& trans);

/// Tape node for the NLL so the loss backpropagates into the network
/// emissions and the transition/start parameters.
ad::VarId crf_nll_op(Tape& tape, ad::VarId emissions, const std::vector<int>& gold,
                     ad::VarId trans_scores, ad::VarId trans_start);

}  // namespace mdcsa
