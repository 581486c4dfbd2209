#include "mdcsa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace mdcsa {

std::vector<double> resample_accel(const std::vector<AccelSample>& samples,
                                   std::int64_t start_ms, int n_ticks) {
  std::vector<double> out(static_cast<std::size_t>(n_ticks) * kAccelChannels, 0.0);
  if (n_ticks <= 0) return out;
  std::vector<double> sum(static_cast<std::size_t>(n_ticks) * kAccelChannels, 0.0);
  std::vector<int> count(static_cast<std::size_t>(n_ticks) * kAccelChannels, 0);

  for (const auto& s : samples) {
    std::int64_t bin = (s.t_ms - start_ms) / kRssiTickMs;
    if (bin < 0 || bin >= n_ticks) continue;
    int base = s.wearable * 3;
    double vals[3] = {s.x, s.y, s.z};
    for (int a = 0; a < 3; ++a) {
      std::size_t idx = static_cast<std::size_t>(bin) * kAccelChannels +
                        static_cast<std::size_t>(base + a);
      sum[idx] += vals[a];
      count[idx] += 1;
    }
  }

  for (int c = 0; c < kAccelChannels; ++c) {
    // Forward fill; leading empty bins take the first observed value.
    double last = 0.0;
    bool seen = false;
    for (int t = 0; t < n_ticks; ++t) {
      std::size_t idx = static_cast<std::size_t>(t) * kAccelChannels + static_cast<std::size_t>(c);
      if (count[idx] > 0) {
        last = sum[idx] / count[idx];
        if (!seen) {
          for (int b = 0; b < t; ++b) {
            out[static_cast<std::size_t>(b) * kAccelChannels + static_cast<std::size_t>(c)] = last;
          }
          seen = true;
        }
      }
      out[idx] = last;
    }
  }
  return out;
}

std::vector<double> impute_rssi(const std::vector<RssiPacket>& packets,
                                std::int64_t start_ms, int n_ticks) {
  std::vector<double> out(static_cast<std::size_t>(n_ticks) * kRssiChannels,
                          kRssiImputeValue);
  if (n_ticks <= 0) return out;
  std::vector<double> sum(out.size(), 0.0);
  std::vector<int> count(out.size(), 0);
  for (const auto& p : packets) {
    std::int64_t bin = (p.t_ms - start_ms) / kRssiTickMs;
    if (bin < 0 || bin >= n_ticks) continue;
    int c = p.wearable * 10 + p.ap;
    std::size_t idx = static_cast<std::size_t>(bin) * kRssiChannels + static_cast<std::size_t>(c);
    sum[idx] += p.dbm;
    count[idx] += 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (count[i] > 0) out[i] = sum[i] / count[i];
  }
  return out;
}

std::vector<SensorWindow> make_windows(const DenseSegment& segment,
                                       const std::string& participant) {
  std::vector<SensorWindow> windows;
  int n_windows = segment.n_ticks / kWindowLen;
  for (int w = 0; w < n_windows; ++w) {
    SensorWindow win;
    win.participant = participant;
    win.start_ms = segment.start_ms + static_cast<std::int64_t>(w) * kWindowLen * kRssiTickMs;
    int t0 = w * kWindowLen;
    win.rssi.assign(segment.rssi.begin() + t0 * kRssiChannels,
                    segment.rssi.begin() + (t0 + kWindowLen) * kRssiChannels);
    win.accel.assign(segment.accel.begin() + t0 * kAccelChannels,
                     segment.accel.begin() + (t0 + kWindowLen) * kAccelChannels);
    win.labels.assign(segment.labels.begin() + t0,
                      segment.labels.begin() + t0 + kWindowLen);
    windows.push_back(std::move(win));
  }
  return windows;
}

std::vector<SensorWindow> windows_from_trace(const RawTrace& trace) {
  std::vector<SensorWindow> all;
  for (const auto& seg : trace.coverage) {
    DenseSegment dense;
    dense.start_ms = seg.start_ms;
    dense.n_ticks = static_cast<int>((seg.end_ms - seg.start_ms) / kRssiTickMs);
    if (dense.n_ticks < kWindowLen) continue;

    // Slices of the (sorted) global streams falling inside this segment.
    auto rssi_lo = std::lower_bound(
        trace.rssi_packets.begin(), trace.rssi_packets.end(), seg.start_ms,
        [](const RssiPacket& p, std::int64_t t) { return p.t_ms < t; });
    auto rssi_hi = std::lower_bound(
        rssi_lo, trace.rssi_packets.end(), seg.end_ms,
        [](const RssiPacket& p, std::int64_t t) { return p.t_ms < t; });
    auto accel_lo = std::lower_bound(
        trace.accel_samples.begin(), trace.accel_samples.end(), seg.start_ms,
        [](const AccelSample& s, std::int64_t t) { return s.t_ms < t; });
    auto accel_hi = std::lower_bound(
        accel_lo, trace.accel_samples.end(), seg.end_ms,
        [](const AccelSample& s, std::int64_t t) { return s.t_ms < t; });

    dense.rssi = impute_rssi({rssi_lo, rssi_hi}, seg.start_ms, dense.n_ticks);
    dense.accel = resample_accel({accel_lo, accel_hi}, seg.start_ms, dense.n_ticks);
    dense.labels.reserve(static_cast<std::size_t>(dense.n_ticks));
    for (int t = 0; t < dense.n_ticks; ++t) {
      dense.labels.push_back(
          room_at_time(trace.truth, seg.start_ms + static_cast<std::int64_t>(t) * kRssiTickMs));
    }
    auto ws = make_windows(dense, trace.participant);
    all.insert(all.end(), std::make_move_iterator(ws.begin()),
               std::make_move_iterator(ws.end()));
  }
  return all;
}

NormalizationStats fit_normalizer(const std::vector<SensorWindow>& windows) {
  if (windows.empty()) throw std::invalid_argument("cannot fit normalizer on no windows");
  NormalizationStats stats;
  stats.n_rssi = windows.front().n_rssi;
  stats.n_accel = windows.front().n_accel;
  int n_channels = stats.n_rssi + stats.n_accel;
  stats.mean.assign(static_cast<std::size_t>(n_channels), 0.0);
  stats.std.assign(static_cast<std::size_t>(n_channels), 0.0);

  std::vector<double> sum(static_cast<std::size_t>(n_channels), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(n_channels), 0.0);
  std::int64_t n = 0;
  for (const auto& w : windows) {
    for (int t = 0; t < kWindowLen; ++t) {
      for (int c = 0; c < stats.n_rssi; ++c) {
        double v = w.rssi_at(t, c);
        sum[static_cast<std::size_t>(c)] += v;
        sumsq[static_cast<std::size_t>(c)] += v * v;
      }
      for (int c = 0; c < stats.n_accel; ++c) {
        double v = w.accel_at(t, c);
        sum[static_cast<std::size_t>(stats.n_rssi + c)] += v;
        sumsq[static_cast<std::size_t>(stats.n_rssi + c)] += v * v;
      }
    }
    n += kWindowLen;
  }
  for (int c = 0; c < n_channels; ++c) {
    double mean = sum[static_cast<std::size_t>(c)] / static_cast<double>(n);
    double var = sumsq[static_cast<std::size_t>(c)] / static_cast<double>(n) - mean * mean;
    stats.mean[static_cast<std::size_t>(c)] = mean;
    double sd = var > 0.0 ? std::sqrt(var) : 0.0;
    stats.std[static_cast<std::size_t>(c)] = sd > 1e-12 ? sd : 1.0;
  }
  return stats;
}

void apply_normalizer(const NormalizationStats& stats, SensorWindow& window) {
  if (window.n_rssi != stats.n_rssi || window.n_accel != stats.n_accel) {
    throw std::invalid_argument("normalizer/window channel mismatch");
  }
  for (int t = 0; t < kWindowLen; ++t) {
    for (int c = 0; c < window.n_rssi; ++c) {
      window.rssi_at(t, c) = (window.rssi_at(t, c) - stats.mean[static_cast<std::size_t>(c)]) /
                             stats.std[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < window.n_accel; ++c) {
      std::size_t k = static_cast<std::size_t>(stats.n_rssi + c);
      window.accel_at(t, c) = (window.accel_at(t, c) - stats.mean[k]) / stats.std[k];
    }
  }
}

void invert_normalizer(const NormalizationStats& stats, SensorWindow& window) {
  for (int t = 0; t < kWindowLen; ++t) {
    for (int c = 0; c < window.n_rssi; ++c) {
      window.rssi_at(t, c) = window.rssi_at(t, c) * stats.std[static_cast<std::size_t>(c)] +
                             stats.mean[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < window.n_accel; ++c) {
      std::size_t k = static_cast<std::size_t>(stats.n_rssi + c);
      window.accel_at(t, c) = window.accel_at(t, c) * stats.std[k] + stats.mean[k];
    }
  }
}

SensorWindow mask_channels(const SensorWindow& window,
                           const std::set<int>& keep_aps, bool keep_accel) {
  if (keep_aps.empty()) throw std::invalid_argument("keep_aps must be non-empty");
  for (int ap : keep_aps) {
    if (ap < 1 || ap > 10) throw std::invalid_argument("AP ids are 1..10");
  }
  if (window.n_rssi != kRssiChannels) {
    throw std::invalid_argument("mask_channels expects an unmasked window");
  }
  SensorWindow out;
  out.participant = window.participant;
  out.start_ms = window.start_ms;
  out.labels = window.labels;
  out.n_rssi = static_cast<int>(keep_aps.size()) * 2;
  out.n_accel = keep_accel ? window.n_accel : 0;
  out.rssi.reserve(static_cast<std::size_t>(kWindowLen * out.n_rssi));
  for (int t = 0; t < kWindowLen; ++t) {
    for (int w = 0; w < 2; ++w) {
      for (int ap : keep_aps) {
        out.rssi.push_back(window.rssi_at(t, w * 10 + (ap - 1)));
      }
    }
  }
  if (keep_accel) out.accel = window.accel;
  return out;
}

std::vector<int> select_top_aps(const std::vector<SensorWindow>& windows, int k) {
  std::array<std::int64_t, 10> counts{};
  for (const auto& w : windows) {
    if (w.n_rssi != kRssiChannels) throw std::invalid_argument("expects unmasked windows");
    for (int t = 0; t < kWindowLen; ++t) {
      for (int c = 0; c < kRssiChannels; ++c) {
        if (w.rssi_at(t, c) != kRssiImputeValue) counts[static_cast<std::size_t>(c % 10)]++;
      }
    }
  }
  std::vector<int> aps(10);
  for (int i = 0; i < 10; ++i) aps[static_cast<std::size_t>(i)] = i + 1;
  std::stable_sort(aps.begin(), aps.end(), [&](int a, int b) {
    return counts[static_cast<std::size_t>(a - 1)] > counts[static_cast<std::size_t>(b - 1)];
  });
  aps.resize(static_cast<std::size_t>(k));
  std::sort(aps.begin(), aps.end());
  return aps;
}

void save_normalizer(const NormalizationStats& stats, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "# mdcsa-norm v1\n" << stats.n_rssi << ' ' << stats.n_accel << '\n';
  char buf[64];
  for (double m : stats.mean) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", m);
    f << buf;
  }
  for (double s : stats.std) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", s);
    f << buf;
  }
}

NormalizationStats load_normalizer(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(f, header);
  if (header != "# mdcsa-norm v1") throw std::runtime_error(path + ": not a normalizer file");
  NormalizationStats stats;
  f >> stats.n_rssi >> stats.n_accel;
  std::size_t n = static_cast<std::size_t>(stats.n_rssi + stats.n_accel);
  stats.mean.resize(n);
  stats.std.resize(n);
  for (double& m : stats.mean) f >> m;
  for (double& s : stats.std) f >> s;
  if (!f) throw std::runtime_error(path + ": truncated normalizer file");
  return stats;
}

// ---------------------------------------------------------------------------
// Binary serialization
// ---------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kWindowMagic = 0x4d444357;  // "MDCW"
constexpr std::uint32_t kWindowVersion = 1;

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_windows(const std::vector<SensorWindow>& windows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  put(f, kWindowMagic);
  put(f, kWindowVersion);
  int n_rssi = windows.empty() ? kRssiChannels : windows.front().n_rssi;
  int n_accel = windows.empty() ? kAccelChannels : windows.front().n_accel;
  put(f, static_cast<std::int32_t>(kWindowLen));
  put(f, static_cast<std::int32_t>(n_rssi));
  put(f, static_cast<std::int32_t>(n_accel));

  // Participant table.
  std::map<std::string, std::uint16_t> index;
  std::vector<std::string> names;
  for (const auto& w : windows) {
    if (index.emplace(w.participant, static_cast<std::uint16_t>(names.size())).second) {
      names.push_back(w.participant);
    }
  }
  put(f, static_cast<std::uint32_t>(names.size()));
  for (const auto& n : names) {
    put(f, static_cast<std::uint32_t>(n.size()));
    f.write(n.data(), static_cast<std::streamsize>(n.size()));
  }

  put(f, static_cast<std::uint64_t>(windows.size()));
  for (const auto& w : windows) {
    if (w.n_rssi != n_rssi || w.n_accel != n_accel) {
      throw std::invalid_argument("mixed window shapes in one file");
    }
    put(f, index.at(w.participant));
    put(f, w.start_ms);
    for (Room r : w.labels) put(f, static_cast<std::uint8_t>(r));
    f.write(reinterpret_cast<const char*>(w.rssi.data()),
            static_cast<std::streamsize>(w.rssi.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(w.accel.data()),
            static_cast<std::streamsize>(w.accel.size() * sizeof(double)));
  }
}

std::vector<SensorWindow> load_windows(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  if (get<std::uint32_t>(f) != kWindowMagic) throw std::runtime_error("bad window file magic");
  if (get<std::uint32_t>(f) != kWindowVersion) throw std::runtime_error("unsupported window file version");
  int T = get<std::int32_t>(f);
  int n_rssi = get<std::int32_t>(f);
  int n_accel = get<std::int32_t>(f);
  if (T != kWindowLen) throw std::runtime_error("unexpected window length");

  std::uint32_t n_names = get<std::uint32_t>(f);
  std::vector<std::string> names(n_names);
  for (auto& n : names) {
    std::uint32_t len = get<std::uint32_t>(f);
    n.resize(len);
    f.read(n.data(), static_cast<std::streamsize>(len));
  }

  std::uint64_t count = get<std::uint64_t>(f);
  std::vector<SensorWindow> windows;
  windows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    SensorWindow w;
    w.n_rssi = n_rssi;
    w.n_accel = n_accel;
    w.participant = names.at(get<std::uint16_t>(f));
    w.start_ms = get<std::int64_t>(f);
    w.labels.resize(kWindowLen);
    for (auto& r : w.labels) r = static_cast<Room>(get<std::uint8_t>(f));
    w.rssi.resize(static_cast<std::size_t>(kWindowLen * n_rssi));
    f.read(reinterpret_cast<char*>(w.rssi.data()),
           static_cast<std::streamsize>(w.rssi.size() * sizeof(double)));
    w.accel.resize(static_cast<std::size_t>(kWindowLen * n_accel));
    f.read(reinterpret_cast<char*>(w.accel.data()),
           static_cast<std::streamsize>(w.accel.size() * sizeof(double)));
    windows.push_back(std::move(w));
  }
  if (!f) throw std::runtime_error("truncated window file: " + path);
  return windows;
}

}  // namespace mdcsa
