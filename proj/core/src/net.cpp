#include "mdcsa/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mdcsa/random.hpp"

namespace mdcsa {

using json = nlohmann::json;

void MdcsaConfig::validate() const {
  if (d <= 0) throw std::invalid_argument("d must be > 0");
  if (kernels.empty()) throw std::invalid_argument("kernels must be non-empty");
  for (int k : kernels) {
    if (k < 1) throw std::invalid_argument("kernel sizes must be >= 1");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout in [0, 1)");
  if (n_rooms < 2) throw std::invalid_argument("need >= 2 rooms");
  if (window_len < 1) throw std::invalid_argument("window_len must be >= 1");
  if (rssi_channels < 1) throw std::invalid_argument("need >= 1 RSSI channel");
  if (accel_channels < 0) throw std::invalid_argument("accel_channels must be >= 0");
  if (referenced_room < 0 || referenced_room >= n_rooms) {
    throw std::invalid_argument("referenced_room out of range");
  }
}

// ---------------------------------------------------------------------------
// ParameterStore
// ---------------------------------------------------------------------------

Matrix& ParameterStore::add(const std::string& name, int rows, int cols) {
  auto [it, inserted] = values_.emplace(name, Matrix(rows, cols));
  if (!inserted) throw std::invalid_argument("duplicate parameter: " + name);
  order_.push_back(name);
  grads_.emplace(name, Matrix(rows, cols));
  return it->second;
}

Matrix& ParameterStore::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("no parameter: " + name);
  return it->second;
}

const Matrix& ParameterStore::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("no parameter: " + name);
  return it->second;
}

Matrix& ParameterStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw std::out_of_range("no parameter: " + name);
  return it->second;
}

void ParameterStore::zero_grads() {
  for (auto& [name, g] : grads_) {
    std::fill(g.a.begin(), g.a.end(), 0.0);
  }
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, v] : values_) n += v.size();
  return n;
}

bool ParameterStore::all_finite() const {
  for (const auto& [name, v] : values_) {
    for (double x : v.a) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

Matrix sinusoidal_position_encoding(int T, int d) {
  Matrix P(T, d);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < d; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / d);
      P(t, i) = std::sin(t * freq);
      if (i + 1 < d) P(t, i + 1) = std::cos(t * freq);
    }
  }
  return P;
}

namespace netops {

ad::VarId embed_modality(Tape& t, const Matrix& x, ad::VarId W, ad::VarId b,
                         const Matrix& posenc) {
  if (x.cols != t.value(W).rows) {
    throw std::invalid_argument("embedding channel mismatch");
  }
  ad::VarId xin = t.leaf(x);
  ad::VarId h = ad::add_row(t, ad::matmul(t, xin, W), b);
  return ad::add(t, h, t.leaf(posenc));
}

ad::VarId self_attention(Tape& t, ad::VarId q, ad::VarId k, ad::VarId v) {
  int d = t.value(q).cols;
  ad::VarId scores = ad::scale(t, ad::matmul_nt(t, q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  return ad::matmul(t, ad::softmax_rows(t, scores), v);
}

ad::VarId grn(Tape& t, ad::VarId a, ad::VarId c, const GrnParams& p) {
  ad::VarId eta = ad::elu(
      t, ad::add_row(t, ad::add(t, ad::matmul(t, a, p.W1), ad::matmul(t, c, p.W3)), p.b1));
  ad::VarId y = ad::add_row(t, ad::matmul(t, eta, p.W2), p.b2);
  ad::VarId gate = ad::sigmoid(t, ad::add_row(t, ad::matmul(t, y, p.W4), p.b4));
  ad::VarId lin = ad::add_row(t, ad::matmul(t, y, p.W5), p.b5);
  ad::VarId glu = ad::hadamard(t, gate, lin);
  return ad::layer_norm(t, ad::add(t, a, glu), p.norm_g, p.norm_b);
}

namespace {
// Conv-attention stream: SA(conv(x) Wq, conv(x) Wk, x Wv), residual, norm.
ad::VarId csa_stream(Tape& t, ad::VarId x, const DcsaParams& p, ad::VarId norm_g,
                     ad::VarId norm_b) {
  ad::VarId conv = ad::causal_conv(t, x, p.conv_kernel, p.conv_bias);
  ad::VarId attn = self_attention(t, ad::matmul(t, conv, p.Wq),
                                  ad::matmul(t, conv, p.Wk), ad::matmul(t, x, p.Wv));
  return ad::layer_norm(t, ad::add(t, attn, x), norm_g, norm_b);
}
}  // namespace

ad::VarId dcsa_forward(Tape& t, ad::VarId x1, ad::VarId x2, const DcsaParams& p) {
  ad::VarId s1 = csa_stream(t, x1, p, p.norm1_g, p.norm1_b);
  ad::VarId s2 = csa_stream(t, x2, p, p.norm2_g, p.norm2_b);
  return grn(t, s1, s2, p.grn);
}

}  // namespace netops

// ---------------------------------------------------------------------------
// MdcsaNet
// ---------------------------------------------------------------------------

MdcsaNet::MdcsaNet(MdcsaConfig config) : config_(std::move(config)) {
  config_.validate();
  posenc_ = sinusoidal_position_encoding(config_.window_len, config_.d);

  int d = config_.d;
  params_.add("embed_rssi.W", config_.rssi_channels, d);
  params_.add("embed_rssi.b", 1, d);
  if (config_.accel_channels > 0) {
    params_.add("embed_accel.W", config_.accel_channels, d);
    params_.add("embed_accel.b", 1, d);
  } else {
    params_.add("embed_accel.const", 1, d);
  }
  for (int k : config_.kernels) {
    std::string p = "dcsa" + std::to_string(k) + ".";
    for (int j = 0; j < k; ++j) params_.add(p + "conv.K" + std::to_string(j), d, d);
    params_.add(p + "conv.b", 1, d);
    params_.add(p + "Wq", d, d);
    params_.add(p + "Wk", d, d);
    params_.add(p + "Wv", d, d);
    params_.add(p + "norm1.g", 1, d);
    params_.add(p + "norm1.b", 1, d);
    params_.add(p + "norm2.g", 1, d);
    params_.add(p + "norm2.b", 1, d);
    for (const char* w : {"grn.W1", "grn.W2", "grn.W3", "grn.W4", "grn.W5"}) {
      params_.add(p + w, d, d);
    }
    for (const char* b : {"grn.b1", "grn.b2", "grn.b4", "grn.b5"}) {
      params_.add(p + b, 1, d);
    }
    params_.add(p + "grn.norm.g", 1, d);
    params_.add(p + "grn.norm.b", 1, d);
  }
  params_.add("outer.Wq", d, d);
  params_.add("outer.Wk", d, d);
  params_.add("outer.Wv", d, d);
  int n = static_cast<int>(config_.kernels.size());
  for (int j = 0; j < n; ++j) params_.add("agg.K" + std::to_string(j), d, d);
  params_.add("agg.b", 1, d);
  params_.add("agg.norm.g", 1, d);
  params_.add("agg.norm.b", 1, d);
  params_.add("head_room.W", d, config_.n_rooms);
  params_.add("head_room.b", 1, config_.n_rooms);
  params_.add("head_hall.W", d, 1);
  params_.add("head_hall.b", 1, 1);
  params_.add("crf.trans", config_.n_rooms, config_.n_rooms);
  params_.add("crf.start", 1, config_.n_rooms);
}

void MdcsaNet::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(SeedStream(seed).derive("init"));
  for (const auto& name : params_.names()) {
    Matrix& m = params_.at(name);
    bool is_norm_gain = name.ends_with("norm.g") || name.ends_with("norm1.g") ||
                        name.ends_with("norm2.g");
    bool is_crf = name.starts_with("crf.");
    bool is_bias = m.rows == 1 && !is_norm_gain && !name.ends_with(".const");
    if (is_norm_gain) {
      std::fill(m.a.begin(), m.a.end(), 1.0);
    } else if (is_crf || is_bias) {
      std::fill(m.a.begin(), m.a.end(), 0.0);
    } else {
      double bound = 1.0 / std::sqrt(static_cast<double>(m.rows > 1 ? m.rows : m.cols));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& v : m.a) v = u(rng);
    }
  }
}

namespace {

netops::DcsaParams dcsa_params(Tape& tape, std::map<std::string, ad::VarId>& leaves,
                               int k) {
  std::string p = "dcsa" + std::to_string(k) + ".";
  netops::DcsaParams dp;
  for (int j = 0; j < k; ++j) dp.conv_kernel.push_back(leaves.at(p + "conv.K" + std::to_string(j)));
  dp.conv_bias = leaves.at(p + "conv.b");
  dp.Wq = leaves.at(p + "Wq");
  dp.Wk = leaves.at(p + "Wk");
  dp.Wv = leaves.at(p + "Wv");
  dp.norm1_g = leaves.at(p + "norm1.g");
  dp.norm1_b = leaves.at(p + "norm1.b");
  dp.norm2_g = leaves.at(p + "norm2.g");
  dp.norm2_b = leaves.at(p + "norm2.b");
  dp.grn = {leaves.at(p + "grn.W1"), leaves.at(p + "grn.W2"), leaves.at(p + "grn.W3"),
            leaves.at(p + "grn.W4"), leaves.at(p + "grn.W5"), leaves.at(p + "grn.b1"),
            leaves.at(p + "grn.b2"), leaves.at(p + "grn.b4"), leaves.at(p + "grn.b5"),
            leaves.at(p + "grn.norm.g"), leaves.at(p + "grn.norm.b")};
  (void)tape;
  return dp;
}

Matrix window_matrix(const std::vector<double>& data, int T, int c) {
  Matrix m(T, c);
  m.a = data;
  return m;
}

}  // namespace

MdcsaNet::Forward MdcsaNet::forward(Tape& tape, const SensorWindow& window,
                                    bool training, std::mt19937_64* dropout_rng) const {
  const int T = config_.window_len;
  const int d = config_.d;
  if (static_cast<int>(window.labels.size()) != T) {
    throw std::invalid_argument("window length mismatch");
  }
  if (window.n_rssi != config_.rssi_channels) {
    throw std::invalid_argument("rssi channel mismatch");
  }
  if (config_.accel_channels > 0 && window.n_accel != config_.accel_channels) {
    throw std::invalid_argument("accel channel mismatch");
  }
  if (training && config_.dropout > 0.0 && dropout_rng == nullptr) {
    throw std::invalid_argument("training forward needs a dropout rng");
  }

  Forward f;
  for (const auto& name : params_.names()) {
    f.leaves.emplace(name, tape.leaf(params_.at(name)));
  }

  ad::VarId h_r = netops::embed_modality(
      tape, window_matrix(window.rssi, T, window.n_rssi), f.leaves.at("embed_rssi.W"),
      f.leaves.at("embed_rssi.b"), posenc_);
  ad::VarId h_a;
  if (config_.accel_channels > 0) {
    h_a = netops::embed_modality(tape, window_matrix(window.accel, T, window.n_accel),
                                 f.leaves.at("embed_accel.W"),
                                 f.leaves.at("embed_accel.b"), posenc_);
  } else {
    // RSSI-only ablation: a learned constant stream keeps the dual-input
    // architecture intact.
    ad::VarId zero = tape.leaf(Matrix(T, d));
    h_a = ad::add(tape, ad::add_row(tape, zero, f.leaves.at("embed_accel.const")),
                  tape.leaf(posenc_));
  }

  std::vector<ad::VarId> blocks;
  for (int k : config_.kernels) {
    blocks.push_back(netops::dcsa_forward(tape, h_r, h_a, dcsa_params(tape, f.leaves, k)));
  }
  ad::VarId xi = ad::interleave(tape, blocks);
  ad::VarId attended = netops::self_attention(
      tape, ad::matmul(tape, xi, f.leaves.at("outer.Wq")),
      ad::matmul(tape, xi, f.leaves.at("outer.Wk")),
      ad::matmul(tape, xi, f.leaves.at("outer.Wv")));

  std::vector<ad::VarId> agg_kernel;
  for (std::size_t j = 0; j < config_.kernels.size(); ++j) {
    agg_kernel.push_back(f.leaves.at("agg.K" + std::to_string(j)));
  }
  ad::VarId h = ad::strided_conv(tape, attended, agg_kernel, f.leaves.at("agg.b"));
  h = ad::layer_norm(tape, h, f.leaves.at("agg.norm.g"), f.leaves.at("agg.norm.b"));
  if (training && config_.dropout > 0.0) {
    h = ad::dropout(tape, h, config_.dropout, *dropout_rng, true);
  }

  f.embedding = h;
  f.emissions = ad::add_row(tape, ad::matmul(tape, h, f.leaves.at("head_room.W")),
                            f.leaves.at("head_room.b"));
  f.hallway_logits = ad::add_row(tape, ad::matmul(tape, h, f.leaves.at("head_hall.W")),
                                 f.leaves.at("head_hall.b"));
  return f;
}

void MdcsaNet::accumulate_grads(Tape& tape, const Forward& fwd) {
  for (const auto& [name, id] : fwd.leaves) {
    const Matrix& g = tape.grad(id);
    Matrix& acc = params_.grad(name);
    for (std::size_t i = 0; i < g.size(); ++i) acc.a[i] += g.a[i];
  }
}

Matrix MdcsaNet::emissions(const SensorWindow& window) const {
  Tape tape;
  Forward f = forward(tape, window, false, nullptr);
  return tape.value(f.emissions);
}

std::vector<double> MdcsaNet::hallway_logits(const SensorWindow& window) const {
  Tape tape;
  Forward f = forward(tape, window, false, nullptr);
  const Matrix& m = tape.value(f.hallway_logits);
  return m.a;
}

std::vector<int> MdcsaNet::predict_rooms(const SensorWindow& window) const {
  return viterbi_decode(emissions(window), transitions()).first;
}

TransitionMatrix MdcsaNet::transitions() const {
  TransitionMatrix t(config_.n_rooms);
  t.scores = params_.at("crf.trans");
  t.start = params_.at("crf.start");
  return t;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kCkptMagic = 0x4d44434b;  // "MDCK"
constexpr std::uint32_t kCkptVersion = 1;
}  // namespace

void MdcsaNet::save_checkpoint(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  json cfg{{"d", config_.d},
           {"kernels", config_.kernels},
           {"dropout", config_.dropout},
           {"n_rooms", config_.n_rooms},
           {"rssi_channels", config_.rssi_channels},
           {"accel_channels", config_.accel_channels},
           {"window_len", config_.window_len},
           {"referenced_room", config_.referenced_room}};
  std::string cfg_str = cfg.dump();

  auto put32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  put32(kCkptMagic);
  put32(kCkptVersion);
  put32(static_cast<std::uint32_t>(cfg_str.size()));
  f.write(cfg_str.data(), static_cast<std::streamsize>(cfg_str.size()));
  put32(static_cast<std::uint32_t>(params_.names().size()));
  for (const auto& name : params_.names()) {
    const Matrix& m = params_.at(name);
    put32(static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put32(static_cast<std::uint32_t>(m.rows));
    put32(static_cast<std::uint32_t>(m.cols));
    f.write(reinterpret_cast<const char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
  }
}

MdcsaNet MdcsaNet::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  auto get32 = [&]() {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  if (get32() != kCkptMagic) throw std::runtime_error("bad checkpoint magic");
  if (get32() != kCkptVersion) throw std::runtime_error("unsupported checkpoint version");
  std::string cfg_str(get32(), '\0');
  f.read(cfg_str.data(), static_cast<std::streamsize>(cfg_str.size()));
  json cfg = json::parse(cfg_str);

  MdcsaConfig config;
  config.d = cfg.at("d");
  config.kernels = cfg.at("kernels").get<std::vector<int>>();
  config.dropout = cfg.at("dropout");
  config.n_rooms = cfg.at("n_rooms");
  config.rssi_channels = cfg.at("rssi_channels");
  config.accel_channels = cfg.at("accel_channels");
  config.window_len = cfg.at("window_len");
  config.referenced_room = cfg.at("referenced_room");

  MdcsaNet net(config);
  std::uint32_t count = get32();
  if (count != net.params_.names().size()) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get32(), '\0');
    f.read(name.data(), static_cast<std::streamsize>(name.size()));
    std::uint32_t rows = get32(), cols = get32();
    Matrix& m = net.params_.at(name);
    if (m.rows != static_cast<int>(rows) || m.cols != static_cast<int>(cols)) {
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    }
    f.read(reinterpret_cast<char*>(m.a.data()),
           static_cast<std::streamsize>(m.a.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return net;
}

}  // namespace mdcsa
