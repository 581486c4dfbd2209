#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdcsa/random.hpp"

namespace mdcsa {

// ---------------------------------------------------------------------------
// Rooms and geometry
// ---------------------------------------------------------------------------

enum class Room : int {
  Kitchen = 0,
  Hallway = 1,
  Dining = 2,
  Living = 3,
  Stairs = 4,
  Porch = 5,
};
inline constexpr int kNumRooms = 6;

const char* room_name(Room r);
std::optional<Room> room_from_name(const std::string& name);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(Point p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  Point centroid() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
};

struct Wall {
  Point a, b;
};

struct HouseLayout {
  std::vector<std::pair<Room, Rect>> rooms;  // all 6, hallway included
  std::vector<Point> ap_positions;           // exactly 10
  Room hallway_id = Room::Hallway;
  std::vector<std::pair<Room, Room>> adjacency;
  std::vector<Wall> interior_walls;
  Rect bounds;

  Room room_at(Point p) const;
  Point room_centroid(Room r) const;
  /// Number of interior walls crossed by the straight segment a-b.
  int walls_between(Point a, Point b) const;
};

/// Fixed two-storey layout: 6 labelled ground-floor zones around a central
/// hallway, 10 access points. Deterministic.
HouseLayout build_default_layout();

// ---------------------------------------------------------------------------
// Participants and schedules
// ---------------------------------------------------------------------------

enum class Group { PD, HC };
enum class MedState { On, Off };
enum class Wearable : std::uint8_t { Left = 0, Right = 1 };

struct Demographics {
  double age = 0.0;
  int gender = 0;  // 0 female, 1 male
  double years_since_diagnosis = 0.0;
  double updrs_on = 0.0;
  double updrs_off = 0.0;
};

struct ParticipantProfile {
  std::string id;
  Group group = Group::HC;
  double tremor_amplitude = 0.0;  // m/s^2, 0 for HC
  double tremor_freq_hz = 5.0;    // within 4-6 Hz
  double walk_speed_on = 1.2;     // m/s
  double walk_speed_off = 1.2;    // <= walk_speed_on for PD
  std::array<double, kNumRooms> dwell_mean_s{};  // hallway entry unused
  Demographics demographics;
};

/// One 4-hour slot of one day. Slot 0 starts at 06:00, slot 3 ends 22:00.
struct MedWindow {
  int day = 0;   // 0-based
  int slot = 0;  // 0..3
  MedState state = MedState::On;
};

struct MedicationSchedule {
  std::string participant;
  std::vector<MedWindow> windows;  // 4 x days, exactly one Off
  MedState state_at(int day, int slot) const;
};

// ---------------------------------------------------------------------------
// Raw traces
// ---------------------------------------------------------------------------

inline constexpr double kRssiHz = 5.0;
inline constexpr double kAccelHz = 30.0;
inline constexpr std::int64_t kRssiTickMs = 200;

struct RssiPacket {
  std::int64_t t_ms = 0;
  std::uint8_t wearable = 0;
  std::uint8_t ap = 0;  // 0..9
  float dbm = 0.0f;
};

struct AccelSample {
  std::int64_t t_ms = 0;
  std::uint8_t wearable = 0;
  float x = 0.0f, y = 0.0f, z = 0.0f;
};

struct RoomStep {
  std::int64_t t_ms = 0;
  Room room = Room::Hallway;
};

struct PositionSample {
  std::int64_t t_ms = 0;
  double x = 0.0, y = 0.0;
  double speed = 0.0;  // 0 while dwelling
};

/// Sensor streams are synthesized inside coverage segments (mirroring the
/// annotated-hours regime the downstream pipeline is built for); room truth
/// covers the whole trace.
struct CoverageSegment {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

struct RawTrace {
  std::string participant;
  std::vector<RssiPacket> rssi_packets;
  std::vector<AccelSample> accel_samples;
  std::vector<RoomStep> truth;  // 5 Hz, gap-free over the trace span
  std::vector<CoverageSegment> coverage;
};

struct Trajectory {
  std::vector<PositionSample> positions;  // 5 Hz
  std::vector<RoomStep> truth;            // same ticks
};

// ---------------------------------------------------------------------------
// Simulator configuration
// ---------------------------------------------------------------------------

struct RadioConfig {
  double p0_dbm = -40.0;  // received power at reference distance
  double d0_m = 1.0;
  double exponent = 2.5;
  double wall_db = 5.0;
  double shadowing_db = 4.0;
  double floor_dbm = -100.0;
};

struct SimConfig {
  RadioConfig radio;
  int n_pairs = 12;
  int days = 5;
  double day_hours = 16.0;            // 06:00-22:00
  double coverage_min_per_day = 60.0;  // split evenly, one segment per slot
  double off_speed_factor = 0.5;
  double accel_noise = 0.05;    // white noise sd, m/s^2
  double kitchen_burst_amp = 1.5;
  double walk_osc_hz = 2.0;
  double tremor_off_boost = 1.5;
};

inline constexpr std::int64_t kDayMs = 16 * 3600 * 1000;
inline constexpr std::int64_t kSlotMs = 4 * 3600 * 1000;

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Semi-Markov walk over the labelled rooms. Dwell in a room, then traverse
/// room-centroid -> hallway-centroid -> room-centroid at the profile's current
/// walking speed (OFF windows slow PD participants down).
Trajectory simulate_trajectory(const ParticipantProfile& profile,
                               const MedicationSchedule* schedule,
                               const HouseLayout& layout, double duration_s,
                               std::uint64_t seed);

/// Log-distance path loss with wall attenuation and Gaussian shadowing; a
/// packet is emitted only when the received power clears the floor. The two
/// wearables sit +-0.3 m from the body position.
std::vector<RssiPacket> synthesize_rssi(const std::vector<PositionSample>& positions,
                                        const HouseLayout& layout,
                                        const RadioConfig& radio,
                                        std::uint64_t seed);

/// 30 Hz six-axis signal: gravity + activity (walking oscillation scaled by
/// speed, wrist-dominant kitchen bursts) + PD tremor (boosted during OFF
/// windows) + white noise.
std::vector<AccelSample> synthesize_accel(const Trajectory& traj,
                                          const ParticipantProfile& profile,
                                          const MedicationSchedule* schedule,
                                          const SimConfig& config,
                                          std::uint64_t seed);

struct Cohort {
  HouseLayout layout;
  SimConfig config;
  std::uint64_t seed = 0;
  std::vector<ParticipantProfile> profiles;
  std::vector<MedicationSchedule> schedules;  // PD participants only
  std::vector<RawTrace> traces;               // one per participant

  const ParticipantProfile* profile(const std::string& id) const;
  const MedicationSchedule* schedule(const std::string& id) const;
  const RawTrace* trace(const std::string& id) const;
};

/// One PD + one HC profile per pair; PD participants get a medication
/// schedule with exactly one OFF window across all days.
Cohort generate_cohort(const SimConfig& config, std::uint64_t seed);

std::vector<ParticipantProfile> make_profiles(const SimConfig& config,
                                              std::uint64_t seed);
MedicationSchedule make_schedule(const std::string& participant, int days,
                                 std::uint64_t seed);

/// Room at time t from a run-length-encoded truth stream (entries mark change
/// points; each room holds until the next entry).
Room room_at_time(const std::vector<RoomStep>& truth_rle, std::int64_t t_ms);

// ---------------------------------------------------------------------------
// Serialization (line-delimited streams + JSON manifest)
// ---------------------------------------------------------------------------

void save_cohort(const Cohort& cohort, const std::string& dir);
Cohort load_cohort(const std::string& dir);

}  // namespace mdcsa
