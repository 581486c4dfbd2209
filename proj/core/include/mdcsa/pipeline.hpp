#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mdcsa/simhome.hpp"

namespace mdcsa {

inline constexpr int kWindowLen = 25;    // 5 s at 5 Hz
inline constexpr int kRssiChannels = 20; // 10 APs x 2 wearables
inline constexpr int kAccelChannels = 6; // 3 axes x 2 wearables

/// One synchronized 5-second window. Channel order is fixed and documented:
/// RSSI is wearable-major then AP index (L.ap0..L.ap9, R.ap0..R.ap9), accel
/// is wearable-major then axis (L.x, L.y, L.z, R.x, R.y, R.z).
struct SensorWindow {
  std::string participant;
  std::int64_t start_ms = 0;
  int n_rssi = kRssiChannels;
  int n_accel = kAccelChannels;
  std::vector<double> rssi;    // kWindowLen x n_rssi, row-major
  std::vector<double> accel;   // kWindowLen x n_accel; empty when masked out
  std::vector<Room> labels;    // kWindowLen per-step room truth

  double& rssi_at(int t, int c) { return rssi[static_cast<std::size_t>(t * n_rssi + c)]; }
  double rssi_at(int t, int c) const { return rssi[static_cast<std::size_t>(t * n_rssi + c)]; }
  double& accel_at(int t, int c) { return accel[static_cast<std::size_t>(t * n_accel + c)]; }
  double accel_at(int t, int c) const { return accel[static_cast<std::size_t>(t * n_accel + c)]; }
};

/// Dense synchronized 5 Hz streams for one contiguous segment.
struct DenseSegment {
  std::int64_t start_ms = 0;
  int n_ticks = 0;
  std::vector<double> rssi;    // n_ticks x kRssiChannels, -120 where imputed
  std::vector<double> accel;   // n_ticks x kAccelChannels
  std::vector<Room> labels;    // n_ticks
};

inline constexpr double kRssiImputeValue = -120.0;

/// Bin-mean downsampling of 30 Hz accelerometry to the 5 Hz grid
/// [start_ms, start_ms + n_ticks * 200). Empty bins are forward-filled
/// (leading empty bins take the first observed value).
std::vector<double> resample_accel(const std::vector<AccelSample>& samples,
                                   std::int64_t start_ms, int n_ticks);

/// Densify sparse RSSI packets onto the 5 Hz grid; absent (tick, channel)
/// cells become -120.
std::vector<double> impute_rssi(const std::vector<RssiPacket>& packets,
                                std::int64_t start_ms, int n_ticks);

/// Non-overlapping 25-step windows; the trailing partial window is dropped.
std::vector<SensorWindow> make_windows(const DenseSegment& segment,
                                       const std::string& participant);

/// All windows of one trace, built per coverage segment (windows never cross
/// an annotation gap).
std::vector<SensorWindow> windows_from_trace(const RawTrace& trace);

struct NormalizationStats {
  int n_rssi = kRssiChannels;
  int n_accel = kAccelChannels;
  std::vector<double> mean;  // n_rssi + n_accel
  std::vector<double> std;   // degenerate channels clamped to 1
};

/// Per-channel z-score statistics over a training split.
NormalizationStats fit_normalizer(const std::vector<SensorWindow>& windows);
void apply_normalizer(const NormalizationStats& stats, SensorWindow& window);
void invert_normalizer(const NormalizationStats& stats, SensorWindow& window);

/// Ablation masking: keep only the listed APs (1-based ids) on both wearables;
/// drop the accelerometer block entirely when keep_accel is false.
SensorWindow mask_channels(const SensorWindow& window,
                           const std::set<int>& keep_aps, bool keep_accel);

/// The APs with the highest packet (non-imputed) counts across a training
/// split; used to pick the 4 APs of the reduced-AP ablation.
std::vector<int> select_top_aps(const std::vector<SensorWindow>& windows, int k);

void save_normalizer(const NormalizationStats& stats, const std::string& path);
NormalizationStats load_normalizer(const std::string& path);

// Binary window-file serialization with a versioned header.
void save_windows(const std::vector<SensorWindow>& windows, const std::string& path);
std::vector<SensorWindow> load_windows(const std::string& path);

}  // namespace mdcsa
