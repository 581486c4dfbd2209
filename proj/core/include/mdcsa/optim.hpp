#pragma once

#include <map>
#include <string>

#include "mdcsa/net.hpp"

namespace mdcsa {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int lookahead_sync = 5;      // slow-weight sync period
  double lookahead_alpha = 0.5;
};

/// RAdam (rectified Adam) wrapped in Look-Ahead slow weights.
class Optimizer {
 public:
  Optimizer(ParameterStore& params, OptimConfig config);

  /// One update from the currently accumulated gradients (does not zero them).
  void step();

  long steps_taken() const { return step_; }

 private:
  ParameterStore& params_;
  OptimConfig config_;
  long step_ = 0;
  std::map<std::string, Matrix> m_, v_, slow_;
};

}  // namespace mdcsa
