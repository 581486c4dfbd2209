#pragma once

#include <cassert>
#include <functional>
#include <random>
#include <vector>

namespace mdcsa {

/// Dense row-major matrix of doubles. Small sizes only (T x d blocks); all
/// network math goes through this type.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)]; }
  std::size_t size() const { return a.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// Reverse-mode tape over Matrix values. Build a graph per forward pass,
/// call backward(loss) once, then read leaf gradients.
class Tape {
 public:
  using VarId = int;

  VarId leaf(Matrix value) { return push(std::move(value), nullptr); }
  VarId push(Matrix value, std::function<void(Tape&)> back) {
    nodes_.push_back({std::move(value), Matrix(), std::move(back)});
    auto& n = nodes_.back();
    n.grad = Matrix(n.value.rows, n.value.cols);
    return static_cast<VarId>(nodes_.size() - 1);
  }

  const Matrix& value(VarId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Matrix& value(VarId id) { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(VarId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  Matrix& grad(VarId id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  /// Seeds d(loss) = 1 and propagates; loss must be 1x1.
  void backward(VarId loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> back;
  };
  std::vector<Node> nodes_;
};

// Ops. All return the id of a new node on the tape.
namespace ad {

using VarId = Tape::VarId;

VarId matmul(Tape& t, VarId a, VarId b);     // A B
VarId matmul_nt(Tape& t, VarId a, VarId b);  // A B^T
VarId add(Tape& t, VarId a, VarId b);        // same shape
VarId add_row(Tape& t, VarId x, VarId row);  // broadcast 1 x d row over rows
VarId scale(Tape& t, VarId x, double s);
VarId hadamard(Tape& t, VarId a, VarId b);
VarId softmax_rows(Tape& t, VarId x);
VarId layer_norm(Tape& t, VarId x, VarId gain, VarId bias);  // per row
VarId elu(Tape& t, VarId x);
VarId sigmoid(Tape& t, VarId x);

/// Causal 1D convolution over time: out[t] = bias + sum_j x[t-k+1+j] K[j],
/// rows before the window start treated as zero.
VarId causal_conv(Tape& t, VarId x, const std::vector<VarId>& kernel, VarId bias);

/// Kernel-n stride-n convolution: input (n*T) x d -> T x d,
/// out[t] = bias + sum_j x[n t + j] K[j].
VarId strided_conv(Tape& t, VarId x, const std::vector<VarId>& kernel, VarId bias);

/// Row-interleave n equally shaped T x d blocks into (n*T) x d:
/// out[t*n + i] = block_i[t].
VarId interleave(Tape& t, const std::vector<VarId>& blocks);

/// Inverted dropout (scales by 1/(1-rate)); identity when !training or rate 0.
VarId dropout(Tape& t, VarId x, double rate, std::mt19937_64& rng, bool training);

/// Mean over steps of binary cross entropy with logits (numerically stable).
VarId bce_with_logits(Tape& t, VarId logits, const Matrix& targets);

}  // namespace ad
}  // namespace mdcsa
