#include "mdcsa/simhome.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mdcsa {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Rooms
// ---------------------------------------------------------------------------

const char* room_name(Room r) {
  switch (r) {
    case Room::Kitchen: return "kitchen";
    case Room::Hallway: return "hallway";
    case Room::Dining: return "dining";
    case Room::Living: return "living";
    case Room::Stairs: return "stairs";
    case Room::Porch: return "porch";
  }
  return "?";
}

std::optional<Room> room_from_name(const std::string& name) {
  for (int i = 0; i < kNumRooms; ++i) {
    if (name == room_name(static_cast<Room>(i))) return static_cast<Room>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

Room HouseLayout::room_at(Point p) const {
  // Non-hallway rooms are listed first so that points exactly on a shared
  // wall resolve to the room, keeping hallway runs maximal-but-bounded.
  for (const auto& [room, rect] : rooms) {
    if (room != hallway_id && rect.contains(p)) return room;
  }
  for (const auto& [room, rect] : rooms) {
    if (room == hallway_id && rect.contains(p)) return room;
  }
  // Outside the footprint (should not happen for simulated walks).
  return hallway_id;
}

Point HouseLayout::room_centroid(Room r) const {
  for (const auto& [room, rect] : rooms) {
    if (room == r) return rect.centroid();
  }
  throw std::invalid_argument("unknown room");
}

namespace {
double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  double d1 = cross(q1, q2, p1);
  double d2 = cross(q1, q2, p2);
  double d3 = cross(p1, p2, q1);
  double d4 = cross(p1, p2, q2);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}
}  // namespace

int HouseLayout::walls_between(Point a, Point b) const {
  int n = 0;
  for (const auto& w : interior_walls) {
    if (segments_intersect(a, b, w.a, w.b)) ++n;
  }
  return n;
}

HouseLayout build_default_layout() {
  HouseLayout layout;
  layout.bounds = {0.0, 0.0, 10.0, 9.0};
  layout.hallway_id = Room::Hallway;
  layout.rooms = {
      {Room::Kitchen, {0.0, 0.0, 4.0, 4.5}},
      {Room::Dining, {0.0, 4.5, 4.0, 9.0}},
      {Room::Living, {6.0, 0.0, 10.0, 5.0}},
      {Room::Stairs, {6.0, 5.0, 10.0, 7.0}},
      {Room::Porch, {6.0, 7.0, 10.0, 9.0}},
      {Room::Hallway, {4.0, 0.0, 6.0, 9.0}},
  };
  for (Room r : {Room::Kitchen, Room::Dining, Room::Living, Room::Stairs,
                 Room::Porch}) {
    layout.adjacency.emplace_back(Room::Hallway, r);
  }
  layout.interior_walls = {
      {{4.0, 0.0}, {4.0, 9.0}},   // left rooms | hallway
      {{6.0, 0.0}, {6.0, 9.0}},   // hallway | right rooms
      {{0.0, 4.5}, {4.0, 4.5}},   // kitchen | dining
      {{6.0, 5.0}, {10.0, 5.0}},  // living | stairs
      {{6.0, 7.0}, {10.0, 7.0}},  // stairs | porch
  };
  layout.ap_positions = {
      {1.0, 1.0}, {3.0, 3.5},  // kitchen
      {1.0, 6.0}, {3.0, 8.0},  // dining
      {5.0, 2.0}, {5.0, 7.0},  // hallway
      {7.0, 1.0}, {9.0, 4.0},  // living
      {8.0, 6.0},              // stairs
      {9.0, 8.0},              // porch
  };
  return layout;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

MedState MedicationSchedule::state_at(int day, int slot) const {
  for (const auto& w : windows) {
    if (w.day == day && w.slot == slot) return w.state;
  }
  return MedState::On;
}

MedicationSchedule make_schedule(const std::string& participant, int days,
                                 std::uint64_t seed) {
  if (days < 1) throw std::invalid_argument("days must be >= 1");
  MedicationSchedule s;
  s.participant = participant;
  std::mt19937_64 rng(seed);
  int n = days * 4;
  int off = static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  for (int i = 0; i < n; ++i) {
    s.windows.push_back(
        {i / 4, i % 4, i == off ? MedState::Off : MedState::On});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

namespace {

MedState med_state_at_ms(const MedicationSchedule* schedule, std::int64_t t_ms) {
  if (!schedule) return MedState::On;
  int day = static_cast<int>(t_ms / kDayMs);
  int slot = static_cast<int>((t_ms % kDayMs) / kSlotMs);
  return schedule->state_at(day, slot);
}

constexpr Room kWalkRooms[] = {Room::Kitchen, Room::Dining, Room::Living,
                               Room::Stairs, Room::Porch};

}  // namespace

Trajectory simulate_trajectory(const ParticipantProfile& profile,
                               const MedicationSchedule* schedule,
                               const HouseLayout& layout, double duration_s,
                               std::uint64_t seed) {
  if (duration_s <= 0) throw std::invalid_argument("duration must be > 0");
  std::mt19937_64 rng(seed);

  Trajectory out;
  const std::int64_t n_ticks =
      static_cast<std::int64_t>(duration_s * kRssiHz);
  out.positions.reserve(static_cast<std::size_t>(n_ticks));
  out.truth.reserve(static_cast<std::size_t>(n_ticks));

  Room current = Room::Living;
  std::int64_t tick = 0;

  auto emit = [&](Point p, double speed) {
    std::int64_t t_ms = tick * kRssiTickMs;
    out.positions.push_back({t_ms, p.x, p.y, speed});
    out.truth.push_back({t_ms, layout.room_at(p)});
    ++tick;
  };

  while (tick < n_ticks) {
    // Dwell at the room centroid.
    double mean = profile.dwell_mean_s[static_cast<int>(current)];
    double dwell =
        std::max(5.0, std::exponential_distribution<double>(1.0 / mean)(rng));
    std::int64_t dwell_ticks =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(dwell * kRssiHz));
    Point here = layout.room_centroid(current);
    for (std::int64_t i = 0; i < dwell_ticks && tick < n_ticks; ++i) {
      emit(here, 0.0);
    }
    if (tick >= n_ticks) break;

    // Pick a destination (uniform over the other labelled rooms) and walk
    // through the hallway.
    Room dest = current;
    while (dest == current) {
      int pick = std::uniform_int_distribution<int>(0, 4)(rng);
      dest = kWalkRooms[pick];
    }
    MedState state = med_state_at_ms(schedule, tick * kRssiTickMs);
    double base = state == MedState::Off ? profile.walk_speed_off
                                         : profile.walk_speed_on;
    double jitter = std::lognormal_distribution<double>(
        0.0, 0.1)(rng);  // per-traversal speed variation
    double speed = std::max(0.05, base * jitter);

    Point a = layout.room_centroid(current);
    Point h = layout.room_centroid(layout.hallway_id);
    Point b = layout.room_centroid(dest);
    Point waypoints[3] = {a, h, b};
    for (int leg = 0; leg < 2 && tick < n_ticks; ++leg) {
      Point p0 = waypoints[leg], p1 = waypoints[leg + 1];
      double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
      std::int64_t steps = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(len / speed * kRssiHz));
      for (std::int64_t i = 1; i <= steps && tick < n_ticks; ++i) {
        double f = static_cast<double>(i) / static_cast<double>(steps);
        emit({p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y)}, speed);
      }
    }
    current = dest;
  }
  return out;
}

// ---------------------------------------------------------------------------
// RSSI
// ---------------------------------------------------------------------------

std::vector<RssiPacket> synthesize_rssi(const std::vector<PositionSample>& positions,
                                        const HouseLayout& layout,
                                        const RadioConfig& radio,
                                        std::uint64_t seed) {
  if (positions.empty()) throw std::invalid_argument("positions must be non-empty");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shadow(0.0, 1.0);

  std::vector<RssiPacket> packets;
  packets.reserve(positions.size() * 20);
  const int n_aps = static_cast<int>(layout.ap_positions.size());
  for (const auto& pos : positions) {
    for (int w = 0; w < 2; ++w) {
      Point wp{pos.x + (w == 0 ? -0.3 : 0.3), pos.y};
      for (int ap = 0; ap < n_aps; ++ap) {
        Point app = layout.ap_positions[static_cast<std::size_t>(ap)];
        double dist = std::max(radio.d0_m, std::hypot(wp.x - app.x, wp.y - app.y));
        int walls = layout.walls_between(wp, app);
        double dbm = radio.p0_dbm -
                     10.0 * radio.exponent * std::log10(dist / radio.d0_m) -
                     walls * radio.wall_db +
                     radio.shadowing_db * shadow(rng);
        if (dbm >= radio.floor_dbm) {
          packets.push_back({pos.t_ms, static_cast<std::uint8_t>(w),
                             static_cast<std::uint8_t>(ap),
                             static_cast<float>(dbm)});
        }
      }
    }
  }
  return packets;
}

// ---------------------------------------------------------------------------
// Accelerometry
// ---------------------------------------------------------------------------

std::vector<AccelSample> synthesize_accel(const Trajectory& traj,
                                          const ParticipantProfile& profile,
                                          const MedicationSchedule* schedule,
                                          const SimConfig& config,
                                          std::uint64_t seed) {
  if (traj.positions.empty()) throw std::invalid_argument("trajectory must be non-empty");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int per_tick = static_cast<int>(kAccelHz / kRssiHz);  // 6
  const double dt = 1.0 / kAccelHz;

  std::vector<AccelSample> samples;
  samples.reserve(traj.positions.size() * static_cast<std::size_t>(per_tick) * 2);

  for (std::size_t i = 0; i < traj.positions.size(); ++i) {
    const auto& pos = traj.positions[i];
    Room room = traj.truth[i].room;
    MedState state = med_state_at_ms(schedule, pos.t_ms);
    double tremor_amp = profile.tremor_amplitude *
                        (state == MedState::Off ? config.tremor_off_boost : 1.0);
    for (int j = 0; j < per_tick; ++j) {
      double t = pos.t_ms / 1000.0 + j * dt;
      for (int w = 0; w < 2; ++w) {
        double ax = 0.0, ay = 0.0, az = 9.81;  // gravity along z
        if (pos.speed > 0.0) {
          double amp = 0.8 * pos.speed;
          ax += amp * std::sin(2.0 * M_PI * config.walk_osc_hz * t);
          az += amp * std::cos(2.0 * M_PI * config.walk_osc_hz * t);
        } else if (room == Room::Kitchen && w == 0) {
          // Wrist-dominant activity bursts while in the kitchen.
          std::uint64_t sec = static_cast<std::uint64_t>(t);
          if (fnv1a64(&sec, sizeof(sec), seed) % 10 < 3) {
            ax += config.kitchen_burst_amp * std::sin(2.0 * M_PI * 3.0 * t);
            ay += config.kitchen_burst_amp * std::cos(2.0 * M_PI * 3.0 * t);
          }
        }
        if (tremor_amp > 0.0) {
          ax += tremor_amp * std::sin(2.0 * M_PI * profile.tremor_freq_hz * t);
          ay += 0.6 * tremor_amp *
                std::cos(2.0 * M_PI * profile.tremor_freq_hz * t);
        }
        if (config.accel_noise > 0.0) {
          ax += config.accel_noise * noise(rng);
          ay += config.accel_noise * noise(rng);
          az += config.accel_noise * noise(rng);
        }
        samples.push_back({pos.t_ms + static_cast<std::int64_t>(j * 1000.0 * dt),
                           static_cast<std::uint8_t>(w), static_cast<float>(ax),
                           static_cast<float>(ay), static_cast<float>(az)});
      }
    }
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Cohort
// ---------------------------------------------------------------------------

const ParticipantProfile* Cohort::profile(const std::string& id) const {
  for (const auto& p : profiles) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const MedicationSchedule* Cohort::schedule(const std::string& id) const {
  for (const auto& s : schedules) {
    if (s.participant == id) return &s;
  }
  return nullptr;
}

const RawTrace* Cohort::trace(const std::string& id) const {
  for (const auto& t : traces) {
    if (t.participant == id) return &t;
  }
  return nullptr;
}

std::vector<ParticipantProfile> make_profiles(const SimConfig& config,
                                              std::uint64_t seed) {
  SeedStream seeds(seed);
  std::vector<ParticipantProfile> profiles;
  for (int pair = 0; pair < config.n_pairs; ++pair) {
    auto rng = seeds.engine("profiles", static_cast<std::uint64_t>(pair));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    ParticipantProfile pd;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%02d", pair + 1);
    pd.id = buf;
    pd.group = Group::PD;
    pd.tremor_amplitude = 1.0 + unit(rng);               // 1-2 m/s^2
    pd.tremor_freq_hz = 4.0 + 2.0 * unit(rng);           // 4-6 Hz
    pd.walk_speed_on = 0.9 + 0.2 * unit(rng);
    pd.walk_speed_off = pd.walk_speed_on * config.off_speed_factor;
    pd.dwell_mean_s = {360.0, 0.0, 300.0, 600.0, 60.0, 60.0};
    pd.demographics.age = 55.0 + 25.0 * unit(rng);
    pd.demographics.gender = pair % 2;
    pd.demographics.years_since_diagnosis = 2.0 + 13.0 * unit(rng);
    pd.demographics.updrs_on = 20.0 + 20.0 * unit(rng);
    pd.demographics.updrs_off = pd.demographics.updrs_on + 10.0 + 10.0 * unit(rng);
    profiles.push_back(pd);

    ParticipantProfile hc;
    std::snprintf(buf, sizeof(buf), "H%02d", pair + 1);
    hc.id = buf;
    hc.group = Group::HC;
    hc.tremor_amplitude = 0.0;
    hc.walk_speed_on = 1.1 + 0.2 * unit(rng);
    hc.walk_speed_off = hc.walk_speed_on;
    hc.dwell_mean_s = {360.0, 0.0, 300.0, 600.0, 60.0, 60.0};
    hc.demographics.age = 50.0 + 30.0 * unit(rng);
    hc.demographics.gender = (pair + 1) % 2;
    profiles.push_back(hc);
  }
  return profiles;
}

Cohort generate_cohort(const SimConfig& config, std::uint64_t seed) {
  if (config.n_pairs < 1 || config.days < 1) {
    throw std::invalid_argument("n_pairs and days must be >= 1");
  }
  Cohort cohort;
  cohort.layout = build_default_layout();
  cohort.config = config;
  cohort.seed = seed;
  cohort.profiles = make_profiles(config, seed);

  SeedStream seeds(seed);
  for (const auto& p : cohort.profiles) {
    if (p.group == Group::PD) {
      cohort.schedules.push_back(make_schedule(
          p.id, config.days, seeds.derive("schedule", fnv1a64(p.id.data(), p.id.size()))));
    }
  }

  const double duration_s = config.days * config.day_hours * 3600.0;
  const std::int64_t day_ms =
      static_cast<std::int64_t>(config.day_hours * 3600.0 * 1000.0);
  const std::int64_t seg_ms = static_cast<std::int64_t>(
      config.coverage_min_per_day / 4.0 * 60.0 * 1000.0);

  for (std::size_t pi = 0; pi < cohort.profiles.size(); ++pi) {
    const auto& profile = cohort.profiles[pi];
    const MedicationSchedule* schedule = cohort.schedule(profile.id);
    std::uint64_t pseed = seeds.derive("trajectory", pi);
    Trajectory traj =
        simulate_trajectory(profile, schedule, cohort.layout, duration_s, pseed);

    RawTrace trace;
    trace.participant = profile.id;

    // Room truth, run-length encoded at change points.
    for (std::size_t i = 0; i < traj.truth.size(); ++i) {
      if (i == 0 || traj.truth[i].room != trace.truth.back().room) {
        trace.truth.push_back(traj.truth[i]);
      }
    }

    // Coverage segments: one per 4-hour slot per day.
    auto cov_rng = seeds.engine("coverage", pi);
    const std::int64_t slot_ms = day_ms / 4;
    for (int day = 0; day < config.days; ++day) {
      for (int slot = 0; slot < 4; ++slot) {
        std::int64_t slot_start = day * day_ms + slot * slot_ms;
        std::int64_t span = std::max<std::int64_t>(0, slot_ms - seg_ms);
        std::int64_t offset =
            span > 0 ? static_cast<std::int64_t>(
                           std::uniform_int_distribution<std::int64_t>(0, span)(cov_rng))
                     : 0;
        // Align to the 5 Hz grid so windows land on whole ticks.
        offset -= offset % kRssiTickMs;
        trace.coverage.push_back({slot_start + offset,
                                  std::min(slot_start + offset + seg_ms,
                                           static_cast<std::int64_t>(duration_s * 1000.0))});
      }
    }

    // Sensor streams inside coverage only.
    for (std::size_t si = 0; si < trace.coverage.size(); ++si) {
      const auto& seg = trace.coverage[si];
      std::size_t lo = static_cast<std::size_t>(seg.start_ms / kRssiTickMs);
      std::size_t hi = std::min(traj.positions.size(),
                                static_cast<std::size_t>(seg.end_ms / kRssiTickMs));
      if (lo >= hi) continue;
      std::vector<PositionSample> slice(traj.positions.begin() + static_cast<std::ptrdiff_t>(lo),
                                        traj.positions.begin() + static_cast<std::ptrdiff_t>(hi));
      Trajectory sub;
      sub.positions = slice;
      sub.truth.assign(traj.truth.begin() + static_cast<std::ptrdiff_t>(lo),
                       traj.truth.begin() + static_cast<std::ptrdiff_t>(hi));
      auto rssi = synthesize_rssi(sub.positions, cohort.layout, config.radio,
                                  seeds.derive("rssi", pi * 10007 + si));
      trace.rssi_packets.insert(trace.rssi_packets.end(), rssi.begin(), rssi.end());
      auto accel = synthesize_accel(sub, profile, schedule, config,
                                    seeds.derive("accel", pi * 10007 + si));
      trace.accel_samples.insert(trace.accel_samples.end(), accel.begin(), accel.end());
    }
    cohort.traces.push_back(std::move(trace));
  }
  return cohort;
}

Room room_at_time(const std::vector<RoomStep>& truth_rle, std::int64_t t_ms) {
  if (truth_rle.empty()) throw std::invalid_argument("empty truth stream");
  auto it = std::upper_bound(
      truth_rle.begin(), truth_rle.end(), t_ms,
      [](std::int64_t t, const RoomStep& s) { return t < s.t_ms; });
  if (it == truth_rle.begin()) return it->room;
  return std::prev(it)->room;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace fs = std::filesystem;

namespace {

json profile_to_json(const ParticipantProfile& p) {
  return json{{"id", p.id},
              {"group", p.group == Group::PD ? "PD" : "HC"},
              {"tremor_amplitude", p.tremor_amplitude},
              {"tremor_freq_hz", p.tremor_freq_hz},
              {"walk_speed_on", p.walk_speed_on},
              {"walk_speed_off", p.walk_speed_off},
              {"dwell_mean_s", p.dwell_mean_s},
              {"age", p.demographics.age},
              {"gender", p.demographics.gender},
              {"years_since_diagnosis", p.demographics.years_since_diagnosis},
              {"updrs_on", p.demographics.updrs_on},
              {"updrs_off", p.demographics.updrs_off}};
}

ParticipantProfile profile_from_json(const json& j) {
  ParticipantProfile p;
  p.id = j.at("id");
  p.group = j.at("group") == "PD" ? Group::PD : Group::HC;
  p.tremor_amplitude = j.at("tremor_amplitude");
  p.tremor_freq_hz = j.at("tremor_freq_hz");
  p.walk_speed_on = j.at("walk_speed_on");
  p.walk_speed_off = j.at("walk_speed_off");
  auto d = j.at("dwell_mean_s");
  for (int i = 0; i < kNumRooms; ++i) p.dwell_mean_s[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)];
  p.demographics.age = j.at("age");
  p.demographics.gender = j.at("gender");
  p.demographics.years_since_diagnosis = j.at("years_since_diagnosis");
  p.demographics.updrs_on = j.at("updrs_on");
  p.demographics.updrs_off = j.at("updrs_off");
  return p;
}

json config_to_json(const SimConfig& c) {
  return json{{"p0_dbm", c.radio.p0_dbm},
              {"d0_m", c.radio.d0_m},
              {"exponent", c.radio.exponent},
              {"wall_db", c.radio.wall_db},
              {"shadowing_db", c.radio.shadowing_db},
              {"floor_dbm", c.radio.floor_dbm},
              {"n_pairs", c.n_pairs},
              {"days", c.days},
              {"day_hours", c.day_hours},
              {"coverage_min_per_day", c.coverage_min_per_day},
              {"off_speed_factor", c.off_speed_factor},
              {"accel_noise", c.accel_noise},
              {"kitchen_burst_amp", c.kitchen_burst_amp},
              {"walk_osc_hz", c.walk_osc_hz},
              {"tremor_off_boost", c.tremor_off_boost}};
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  c.radio.p0_dbm = j.at("p0_dbm");
  c.radio.d0_m = j.at("d0_m");
  c.radio.exponent = j.at("exponent");
  c.radio.wall_db = j.at("wall_db");
  c.radio.shadowing_db = j.at("shadowing_db");
  c.radio.floor_dbm = j.at("floor_dbm");
  c.n_pairs = j.at("n_pairs");
  c.days = j.at("days");
  c.day_hours = j.at("day_hours");
  c.coverage_min_per_day = j.at("coverage_min_per_day");
  c.off_speed_factor = j.at("off_speed_factor");
  c.accel_noise = j.at("accel_noise");
  c.kitchen_burst_amp = j.at("kitchen_burst_amp");
  c.walk_osc_hz = j.at("walk_osc_hz");
  c.tremor_off_boost = j.at("tremor_off_boost");
  return c;
}

}  // namespace

void save_cohort(const Cohort& cohort, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "mdcsa-cohort";
  manifest["version"] = 1;
  manifest["seed"] = cohort.seed;
  manifest["config"] = config_to_json(cohort.config);
  for (const auto& p : cohort.profiles) manifest["profiles"].push_back(profile_to_json(p));
  for (const auto& s : cohort.schedules) {
    json js{{"participant", s.participant}, {"windows", json::array()}};
    for (const auto& w : s.windows) {
      js["windows"].push_back({{"day", w.day},
                               {"slot", w.slot},
                               {"state", w.state == MedState::Off ? "OFF" : "ON"}});
    }
    manifest["schedules"].push_back(js);
  }

  char buf[64];
  for (const auto& t : cohort.traces) {
    json jt{{"participant", t.participant}, {"coverage", json::array()}};
    for (const auto& c : t.coverage) {
      jt["coverage"].push_back({{"start_ms", c.start_ms}, {"end_ms", c.end_ms}});
    }
    manifest["traces"].push_back(jt);

    // Field order: timestamp_ms, wearable, channel/axis ids, value(s).
    std::ofstream rssi(fs::path(dir) / (t.participant + ".rssi.txt"));
    for (const auto& p : t.rssi_packets) {
      std::snprintf(buf, sizeof(buf), "%lld %d %d %.9g\n",
                    static_cast<long long>(p.t_ms), p.wearable, p.ap,
                    static_cast<double>(p.dbm));
      rssi << buf;
    }
    std::ofstream accel(fs::path(dir) / (t.participant + ".accel.txt"));
    for (const auto& a : t.accel_samples) {
      std::snprintf(buf, sizeof(buf), "%lld %d %.9g %.9g %.9g\n",
                    static_cast<long long>(a.t_ms), a.wearable,
                    static_cast<double>(a.x), static_cast<double>(a.y),
                    static_cast<double>(a.z));
      accel << buf;
    }
    // Truth is run-length encoded at change points: "t_ms room".
    std::ofstream truth(fs::path(dir) / (t.participant + ".truth.txt"));
    for (const auto& r : t.truth) {
      truth << r.t_ms << ' ' << room_name(r.room) << '\n';
    }
  }
  std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << '\n';
}

Cohort load_cohort(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("missing cohort manifest in " + dir);
  json manifest = json::parse(mf);

  Cohort cohort;
  cohort.layout = build_default_layout();
  cohort.seed = manifest.at("seed");
  cohort.config = config_from_json(manifest.at("config"));
  for (const auto& jp : manifest.at("profiles")) cohort.profiles.push_back(profile_from_json(jp));
  if (manifest.contains("schedules")) {
    for (const auto& js : manifest.at("schedules")) {
      MedicationSchedule s;
      s.participant = js.at("participant");
      for (const auto& jw : js.at("windows")) {
        s.windows.push_back({jw.at("day"), jw.at("slot"),
                             jw.at("state") == "OFF" ? MedState::Off : MedState::On});
      }
      cohort.schedules.push_back(s);
    }
  }
  for (const auto& jt : manifest.at("traces")) {
    RawTrace t;
    t.participant = jt.at("participant");
    for (const auto& jc : jt.at("coverage")) {
      t.coverage.push_back({jc.at("start_ms"), jc.at("end_ms")});
    }
    {
      std::ifstream f(fs::path(dir) / (t.participant + ".rssi.txt"));
      std::int64_t ts;
      int w, ap;
      double v;
      while (f >> ts >> w >> ap >> v) {
        t.rssi_packets.push_back({ts, static_cast<std::uint8_t>(w),
                                  static_cast<std::uint8_t>(ap),
                                  static_cast<float>(v)});
      }
    }
    {
      std::ifstream f(fs::path(dir) / (t.participant + ".accel.txt"));
      std::int64_t ts;
      int w;
      double x, y, z;
      while (f >> ts >> w >> x >> y >> z) {
        t.accel_samples.push_back({ts, static_cast<std::uint8_t>(w),
                                   static_cast<float>(x), static_cast<float>(y),
                                   static_cast<float>(z)});
      }
    }
    {
      std::ifstream f(fs::path(dir) / (t.participant + ".truth.txt"));
      std::int64_t ts;
      std::string name;
      while (f >> ts >> name) {
        auto room = room_from_name(name);
        if (!room) throw std::runtime_error("bad room name: " + name);
        t.truth.push_back({ts, *room});
      }
    }
    cohort.traces.push_back(std::move(t));
  }
  return cohort;
}

}  // namespace mdcsa
