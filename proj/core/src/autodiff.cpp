#include "mdcsa/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace mdcsa {

void Tape::backward(VarId loss) {
  if (value(loss).rows != 1 || value(loss).cols != 1) {
    throw std::invalid_argument("backward expects a scalar loss");
  }
  grad(loss)(0, 0) = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

namespace ad {

namespace {

// C += op(A) * op(B), accumulating.
void gemm_acc(const Matrix& A, bool ta, const Matrix& B, bool tb, Matrix& C) {
  int m = ta ? A.cols : A.rows;
  int k = ta ? A.rows : A.cols;
  int n = tb ? B.rows : B.cols;
  assert((tb ? B.cols : B.rows) == k);
  assert(C.rows == m && C.cols == n);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      double av = ta ? A(p, i) : A(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        C(i, j) += av * (tb ? B(j, p) : B(p, j));
      }
    }
  }
}

constexpr double kLnEps = 1e-6;  // layer norm variance epsilon

}  // namespace

VarId matmul(Tape& t, VarId a, VarId b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols != B.rows) throw std::invalid_argument("matmul shape mismatch");
  Matrix C(A.rows, B.cols);
  gemm_acc(A, false, B, false, C);
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(C), [a, b, out](Tape& tp) {
    gemm_acc(tp.grad(out), false, tp.value(b), true, tp.grad(a));
    gemm_acc(tp.value(a), true, tp.grad(out), false, tp.grad(b));
  });
}

VarId matmul_nt(Tape& t, VarId a, VarId b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols != B.cols) throw std::invalid_argument("matmul_nt shape mismatch");
  Matrix C(A.rows, B.rows);
  gemm_acc(A, false, B, true, C);
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(C), [a, b, out](Tape& tp) {
    gemm_acc(tp.grad(out), false, tp.value(b), false, tp.grad(a));
    gemm_acc(tp.grad(out), true, tp.value(a), false, tp.grad(b));
  });
}

VarId add(Tape& t, VarId a, VarId b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (!A.same_shape(B)) throw std::invalid_argument("add shape mismatch");
  Matrix C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.a[i] += B.a[i];
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(C), [a, b, out](Tape& tp) {
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) {
      tp.grad(a).a[i] += g.a[i];
      tp.grad(b).a[i] += g.a[i];
    }
  });
}

VarId add_row(Tape& t, VarId x, VarId row) {
  const Matrix& X = t.value(x);
  const Matrix& R = t.value(row);
  if (R.rows != 1 || R.cols != X.cols) throw std::invalid_argument("add_row shape mismatch");
  Matrix C = X;
  for (int i = 0; i < C.rows; ++i) {
    for (int j = 0; j < C.cols; ++j) C(i, j) += R(0, j);
  }
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(C), [x, row, out](Tape& tp) {
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) tp.grad(x).a[i] += g.a[i];
    Matrix& gr = tp.grad(row);
    for (int i = 0; i < g.rows; ++i) {
      for (int j = 0; j < g.cols; ++j) gr(0, j) += g(i, j);
    }
  });
}

VarId scale(Tape& t, VarId x, double s) {
  Matrix C = t.value(x);
  for (double& v : C.a) v *= s;
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(C), [x, s, out](Tape& tp) {
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) tp.grad(x).a[i] += s * g.a[i];
  });
}

VarId hadamard(Tape& t, VarId a, VarId b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (!A.same_shape(B)) throw std::invalid_argument("hadamard shape mismatch");
  Matrix C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.a[i] *= B.a[i];
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(C), [a, b, out](Tape& tp) {
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) {
      tp.grad(a).a[i] += g.a[i] * tp.value(b).a[i];
      tp.grad(b).a[i] += g.a[i] * tp.value(a).a[i];
    }
  });
}

VarId softmax_rows(Tape& t, VarId x) {
  Matrix Y = t.value(x);
  for (int i = 0; i < Y.rows; ++i) {
    double mx = Y(i, 0);
    for (int j = 1; j < Y.cols; ++j) mx = std::max(mx, Y(i, j));
    double sum = 0.0;
    for (int j = 0; j < Y.cols; ++j) {
      Y(i, j) = std::exp(Y(i, j) - mx);
      sum += Y(i, j);
    }
    for (int j = 0; j < Y.cols; ++j) Y(i, j) /= sum;
  }
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(Y), [x, out](Tape& tp) {
    const Matrix& y = tp.value(out);
    const Matrix& g = tp.grad(out);
    Matrix& gx = tp.grad(x);
    for (int i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < y.cols; ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

VarId layer_norm(Tape& t, VarId x, VarId gain, VarId bias) {
  const Matrix& X = t.value(x);
  const Matrix& G = t.value(gain);
  const Matrix& B = t.value(bias);
  if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols) {
    throw std::invalid_argument("layer_norm parameter shape mismatch");
  }
  Matrix Y(X.rows, X.cols);
  for (int i = 0; i < X.rows; ++i) {
    double mu = 0.0;
    for (int j = 0; j < X.cols; ++j) mu += X(i, j);
    mu /= X.cols;
    double var = 0.0;
    for (int j = 0; j < X.cols; ++j) {
      double d = X(i, j) - mu;
      var += d * d;
    }
    var /= X.cols;
    double inv = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < X.cols; ++j) {
      Y(i, j) = G(0, j) * (X(i, j) - mu) * inv + B(0, j);
    }
  }
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(Y), [x, gain, bias, out](Tape& tp) {
    const Matrix& X2 = tp.value(x);
    const Matrix& G2 = tp.value(gain);
    const Matrix& g = tp.grad(out);
    Matrix& gx = tp.grad(x);
    Matrix& gg = tp.grad(gain);
    Matrix& gb = tp.grad(bias);
    int d = X2.cols;
    for (int i = 0; i < X2.rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < d; ++j) mu += X2(i, j);
      mu /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        double dv = X2(i, j) - mu;
        var += dv * dv;
      }
      var /= d;
      double inv = 1.0 / std::sqrt(var + kLnEps);
      // dxhat, then the standard two-reduction layer-norm backward.
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (int j = 0; j < d; ++j) {
        double xhat = (X2(i, j) - mu) * inv;
        double dxhat = g(i, j) * G2(0, j);
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        gg(0, j) += g(i, j) * xhat;
        gb(0, j) += g(i, j);
      }
      for (int j = 0; j < d; ++j) {
        double xhat = (X2(i, j) - mu) * inv;
        double dxhat = g(i, j) * G2(0, j);
        gx(i, j) += inv * (dxhat - sum_dxhat / d - xhat * sum_dxhat_xhat / d);
      }
    }
  });
}

VarId elu(Tape& t, VarId x) {
  Matrix Y = t.value(x);
  for (double& v : Y.a) v = v > 0.0 ? v : std::expm1(v);
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(Y), [x, out](Tape& tp) {
    const Matrix& X = tp.value(x);
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double dv = X.a[i] > 0.0 ? 1.0 : std::exp(X.a[i]);
      tp.grad(x).a[i] += g.a[i] * dv;
    }
  });
}

VarId sigmoid(Tape& t, VarId x) {
  Matrix Y = t.value(x);
  for (double& v : Y.a) v = 1.0 / (1.0 + std::exp(-v));
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(Y), [x, out](Tape& tp) {
    const Matrix& y = tp.value(out);
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) {
      tp.grad(x).a[i] += g.a[i] * y.a[i] * (1.0 - y.a[i]);
    }
  });
}

VarId causal_conv(Tape& t, VarId x, const std::vector<VarId>& kernel, VarId bias) {
  const Matrix& X = t.value(x);
  int k = static_cast<int>(kernel.size());
  if (k < 1) throw std::invalid_argument("kernel size must be >= 1");
  int d = X.cols;
  Matrix Y(X.rows, d);
  for (int i = 0; i < X.rows; ++i) {
    for (int j = 0; j < d; ++j) Y(i, j) = t.value(bias)(0, j);
  }
  for (int j = 0; j < k; ++j) {
    const Matrix& K = t.value(kernel[static_cast<std::size_t>(j)]);
    // out[t] += x[t - k + 1 + j] K_j
    for (int ti = 0; ti < X.rows; ++ti) {
      int src = ti - k + 1 + j;
      if (src < 0) continue;
      for (int p = 0; p < d; ++p) {
        double xv = X(src, p);
        if (xv == 0.0) continue;
        for (int q = 0; q < d; ++q) Y(ti, q) += xv * K(p, q);
      }
    }
  }
  VarId out = static_cast<VarId>(t.size());
  auto kern = kernel;
  return t.push(std::move(Y), [x, kern, bias, out, k](Tape& tp) {
    const Matrix& X2 = tp.value(x);
    const Matrix& g = tp.grad(out);
    int d = X2.cols;
    for (int ti = 0; ti < g.rows; ++ti) {
      for (int q = 0; q < d; ++q) tp.grad(bias)(0, q) += g(ti, q);
    }
    for (int j = 0; j < k; ++j) {
      const Matrix& K = tp.value(kern[static_cast<std::size_t>(j)]);
      Matrix& gK = tp.grad(kern[static_cast<std::size_t>(j)]);
      Matrix& gX = tp.grad(x);
      for (int ti = 0; ti < g.rows; ++ti) {
        int src = ti - k + 1 + j;
        if (src < 0) continue;
        for (int p = 0; p < d; ++p) {
          double xv = X2(src, p);
          double acc = 0.0;
          for (int q = 0; q < d; ++q) {
            gK(p, q) += xv * g(ti, q);
            acc += K(p, q) * g(ti, q);
          }
          gX(src, p) += acc;
        }
      }
    }
  });
}

VarId strided_conv(Tape& t, VarId x, const std::vector<VarId>& kernel, VarId bias) {
  const Matrix& X = t.value(x);
  int n = static_cast<int>(kernel.size());
  if (n < 1 || X.rows % n != 0) throw std::invalid_argument("strided_conv: rows must be multiple of kernel size");
  int T = X.rows / n;
  int d = X.cols;
  Matrix Y(T, d);
  for (int ti = 0; ti < T; ++ti) {
    for (int q = 0; q < d; ++q) Y(ti, q) = t.value(bias)(0, q);
    for (int j = 0; j < n; ++j) {
      const Matrix& K = t.value(kernel[static_cast<std::size_t>(j)]);
      int src = ti * n + j;
      for (int p = 0; p < d; ++p) {
        double xv = X(src, p);
        if (xv == 0.0) continue;
        for (int q = 0; q < d; ++q) Y(ti, q) += xv * K(p, q);
      }
    }
  }
  VarId out = static_cast<VarId>(t.size());
  auto kern = kernel;
  return t.push(std::move(Y), [x, kern, bias, out, n](Tape& tp) {
    const Matrix& X2 = tp.value(x);
    const Matrix& g = tp.grad(out);
    int d = X2.cols;
    for (int ti = 0; ti < g.rows; ++ti) {
      for (int q = 0; q < d; ++q) tp.grad(bias)(0, q) += g(ti, q);
      for (int j = 0; j < n; ++j) {
        const Matrix& K = tp.value(kern[static_cast<std::size_t>(j)]);
        Matrix& gK = tp.grad(kern[static_cast<std::size_t>(j)]);
        int src = ti * n + j;
        for (int p = 0; p < d; ++p) {
          double xv = X2(src, p);
          double acc = 0.0;
          for (int q = 0; q < d; ++q) {
            gK(p, q) += xv * g(ti, q);
            acc += K(p, q) * g(ti, q);
          }
          tp.grad(x)(src, p) += acc;
        }
      }
    }
  });
}

VarId interleave(Tape& t, const std::vector<VarId>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("interleave needs >= 1 block");
  int n = static_cast<int>(blocks.size());
  const Matrix& first = t.value(blocks[0]);
  for (VarId b : blocks) {
    if (!t.value(b).same_shape(first)) throw std::invalid_argument("interleave shape mismatch");
  }
  Matrix Y(first.rows * n, first.cols);
  for (int ti = 0; ti < first.rows; ++ti) {
    for (int i = 0; i < n; ++i) {
      const Matrix& B = t.value(blocks[static_cast<std::size_t>(i)]);
      for (int j = 0; j < first.cols; ++j) Y(ti * n + i, j) = B(ti, j);
    }
  }
  VarId out = static_cast<VarId>(t.size());
  auto blks = blocks;
  return t.push(std::move(Y), [blks, out, n](Tape& tp) {
    const Matrix& g = tp.grad(out);
    int T = g.rows / n;
    for (int ti = 0; ti < T; ++ti) {
      for (int i = 0; i < n; ++i) {
        Matrix& gb = tp.grad(blks[static_cast<std::size_t>(i)]);
        for (int j = 0; j < g.cols; ++j) gb(ti, j) += g(ti * n + i, j);
      }
    }
  });
}

VarId dropout(Tape& t, VarId x, double rate, std::mt19937_64& rng, bool training) {
  if (!training || rate <= 0.0) return x;
  const Matrix& X = t.value(x);
  Matrix mask(X.rows, X.cols);
  std::bernoulli_distribution keep(1.0 - rate);
  double inv = 1.0 / (1.0 - rate);
  for (double& m : mask.a) m = keep(rng) ? inv : 0.0;
  Matrix Y = X;
  for (std::size_t i = 0; i < Y.size(); ++i) Y.a[i] *= mask.a[i];
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(Y), [x, out, mask = std::move(mask)](Tape& tp) {
    const Matrix& g = tp.grad(out);
    for (std::size_t i = 0; i < g.size(); ++i) tp.grad(x).a[i] += g.a[i] * mask.a[i];
  });
}

VarId bce_with_logits(Tape& t, VarId logits, const Matrix& targets) {
  const Matrix& Z = t.value(logits);
  if (!Z.same_shape(targets)) throw std::invalid_argument("bce target shape mismatch");
  double T = static_cast<double>(Z.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    double z = Z.a[i];
    // softplus(z) - beta z, stable for large |z|
    double sp = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += sp - targets.a[i] * z;
  }
  Matrix L(1, 1);
  L(0, 0) = loss / T;
  VarId out = static_cast<VarId>(t.size());
  return t.push(std::move(L), [logits, out, targets, T](Tape& tp) {
    double g = tp.grad(out)(0, 0);
    const Matrix& Z2 = tp.value(logits);
    for (std::size_t i = 0; i < Z2.size(); ++i) {
      double s = 1.0 / (1.0 + std::exp(-Z2.a[i]));
      tp.grad(logits).a[i] += g * (s - targets.a[i]) / T;
    }
  });
}

}  // namespace ad
}  // namespace mdcsa
