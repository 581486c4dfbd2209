#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdcsa/autodiff.hpp"
#include "mdcsa/crf.hpp"
#include "mdcsa/pipeline.hpp"

namespace mdcsa {

struct MdcsaConfig {
  int d = 64;                      // embedding dimension
  std::vector<int> kernels = {1, 4, 7};
  double dropout = 0.15;
  int n_rooms = kNumRooms;
  int rssi_channels = kRssiChannels;
  int accel_channels = kAccelChannels;  // 0 = RSSI-only (learned constant stream)
  int window_len = kWindowLen;
  int referenced_room = static_cast<int>(Room::Hallway);

  void validate() const;
};

/// Named parameter tensors with matching gradient accumulators. Iteration
/// order is insertion order, fixed by construction, so flat traversals are
/// deterministic.
class ParameterStore {
 public:
  Matrix& add(const std::string& name, int rows, int cols);
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  Matrix& grad(const std::string& name);
  const std::vector<std::string>& names() const { return order_; }
  bool has(const std::string& name) const { return values_.count(name) > 0; }
  void zero_grads();
  std::size_t total_size() const;
  bool all_finite() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Matrix> values_;
  std::map<std::string, Matrix> grads_;
};

/// Deterministic sinusoidal position encoding, T x d.
Matrix sinusoidal_position_encoding(int T, int d);

// Building blocks, exposed for direct testing.
namespace netops {

/// Affine per-step embedding plus position encoding (x is T x u, row-vector
/// convention: out = x W + b + P).
ad::VarId embed_modality(Tape& t, const Matrix& x, ad::VarId W, ad::VarId b,
                         const Matrix& posenc);

/// softmax(Q K^T / sqrt(d)) V, unmasked.
ad::VarId self_attention(Tape& t, ad::VarId q, ad::VarId k, ad::VarId v);

struct GrnParams {
  ad::VarId W1, W2, W3, W4, W5;
  ad::VarId b1, b2, b4, b5;
  ad::VarId norm_g, norm_b;
};

/// Gated residual network, weights shared across time steps:
/// LayerNorm(a + GLU(W2 ELU(a W1 + c W3 + b1) + b2)).
ad::VarId grn(Tape& t, ad::VarId a, ad::VarId c, const GrnParams& p);

struct DcsaParams {
  std::vector<ad::VarId> conv_kernel;  // k matrices d x d
  ad::VarId conv_bias;
  ad::VarId Wq, Wk, Wv;
  ad::VarId norm1_g, norm1_b, norm2_g, norm2_b;
  GrnParams grn;
};

/// Dual convolutional self-attention: queries/keys from causal-conv features,
/// values from the raw stream; residual + norm per stream; GRN fusion.
ad::VarId dcsa_forward(Tape& t, ad::VarId x1, ad::VarId x2, const DcsaParams& p);

}  // namespace netops

/// The MDCSA network with its CRF transition parameters.
class MdcsaNet {
 public:
  explicit MdcsaNet(MdcsaConfig config);

  void init_params(std::uint64_t seed);
  MdcsaConfig& config() { return config_; }
  const MdcsaConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  /// Ids of every parameter leaf on a tape plus the graph outputs.
  struct Forward {
    std::map<std::string, ad::VarId> leaves;
    ad::VarId embedding = -1;       // refined T x d sequence
    ad::VarId emissions = -1;       // T x m
    ad::VarId hallway_logits = -1;  // T x 1
  };

  /// Builds the full forward graph for one window. Dropout is active only
  /// when training (rng required then).
  Forward forward(Tape& tape, const SensorWindow& window, bool training = false,
                  std::mt19937_64* dropout_rng = nullptr) const;

  /// Copies tape leaf gradients into the store's accumulators.
  void accumulate_grads(Tape& tape, const Forward& fwd);

  // Eval-mode conveniences (fresh throwaway tape).
  Matrix emissions(const SensorWindow& window) const;
  std::vector<int> predict_rooms(const SensorWindow& window) const;
  std::vector<double> hallway_logits(const SensorWindow& window) const;

  TransitionMatrix transitions() const;

  void save_checkpoint(const std::string& path) const;
  static MdcsaNet load_checkpoint(const std::string& path);

 private:
  MdcsaConfig config_;
  ParameterStore params_;
  Matrix posenc_;
};

}  // namespace mdcsa
