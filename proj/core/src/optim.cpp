#include "mdcsa/optim.hpp"

#include <cmath>

namespace mdcsa {

Optimizer::Optimizer(ParameterStore& params, OptimConfig config)
    : params_(params), config_(config) {
  for (const auto& name : params_.names()) {
    const Matrix& p = params_.at(name);
    m_.emplace(name, Matrix(p.rows, p.cols));
    v_.emplace(name, Matrix(p.rows, p.cols));
    slow_.emplace(name, p);
  }
}

void Optimizer::step() {
  ++step_;
  double t = static_cast<double>(step_);
  double b1 = config_.beta1, b2 = config_.beta2;
  double b1t = std::pow(b1, t), b2t = std::pow(b2, t);
  double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);

  bool rectify = rho_t > 4.0;
  double r = 1.0;
  if (rectify) {
    r = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                  ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
  }

  for (const auto& name : params_.names()) {
    Matrix& p = params_.at(name);
    const Matrix& g = params_.grad(name);
    Matrix& m = m_.at(name);
    Matrix& v = v_.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.a[i] = b1 * m.a[i] + (1.0 - b1) * g.a[i];
      v.a[i] = b2 * v.a[i] + (1.0 - b2) * g.a[i] * g.a[i];
      double mhat = m.a[i] / (1.0 - b1t);
      if (rectify) {
        double vhat = std::sqrt(v.a[i] / (1.0 - b2t));
        p.a[i] -= config_.lr * r * mhat / (vhat + config_.eps);
      } else {
        // Variance is untrustworthy early on: plain momentum update.
        p.a[i] -= config_.lr * mhat;
      }
    }
  }

  if (config_.lookahead_sync > 0 && step_ % config_.lookahead_sync == 0) {
    for (const auto& name : params_.names()) {
      Matrix& p = params_.at(name);
      Matrix& s = slow_.at(name);
      for (std::size_t i = 0; i < p.size(); ++i) {
        s.a[i] += config_.lookahead_alpha * (p.a[i] - s.a[i]);
        p.a[i] = s.a[i];
      }
    }
  }
}

}  // namespace mdcsa
