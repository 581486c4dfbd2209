#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "mdcsa/simhome.hpp"

using namespace mdcsa;

namespace {

// Naive DFT power at one frequency over a real signal.
double band_power(const std::vector<double>& x, double hz_lo, double hz_hi,
                  double sample_hz) {
  std::size_t n = x.size();
  double power = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double f = sample_hz * static_cast<double>(k) / static_cast<double>(n);
    if (f < hz_lo || f > hz_hi) continue;
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double ang = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                   static_cast<double>(n);
      re += x[t] * std::cos(ang);
      im -= x[t] * std::sin(ang);
    }
    power += re * re + im * im;
  }
  return power;
}

ParticipantProfile test_pd_profile() {
  ParticipantProfile p;
  p.id = "P99";
  p.group = Group::PD;
  p.tremor_amplitude = 1.5;
  p.tremor_freq_hz = 5.0;
  p.walk_speed_on = 1.2;
  p.walk_speed_off = 0.6;
  p.dwell_mean_s = {30.0, 0.0, 30.0, 30.0, 30.0, 30.0};
  return p;
}

std::vector<double> hallway_run_durations(const std::vector<RoomStep>& truth) {
  std::vector<double> runs;
  std::size_t i = 0;
  while (i < truth.size()) {
    if (truth[i].room != Room::Hallway) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < truth.size() && truth[j].room == Room::Hallway) ++j;
    if (i > 0 && j < truth.size()) {
      runs.push_back(static_cast<double>(j - i) * 0.2);
    }
    i = j;
  }
  return runs;
}

}  // namespace

TEST_CASE("default layout has the hallway-hub topology") {
  HouseLayout layout = build_default_layout();
  CHECK(layout.rooms.size() == 6);
  CHECK(layout.ap_positions.size() == 10);

  std::set<Room> adjacent;
  for (const auto& [a, b] : layout.adjacency) {
    CHECK((a == Room::Hallway || b == Room::Hallway));
    adjacent.insert(a == Room::Hallway ? b : a);
  }
  CHECK(adjacent.size() == 5);
  CHECK(adjacent.count(Room::Hallway) == 0);

  for (const auto& ap : layout.ap_positions) {
    CHECK(layout.bounds.contains(ap));
  }

  HouseLayout again = build_default_layout();
  for (std::size_t i = 0; i < layout.ap_positions.size(); ++i) {
    CHECK(layout.ap_positions[i].x == again.ap_positions[i].x);
    CHECK(layout.ap_positions[i].y == again.ap_positions[i].y);
  }
}

TEST_CASE("profiles respect group invariants") {
  SimConfig cfg;
  cfg.n_pairs = 6;
  auto profiles = make_profiles(cfg, 11);
  REQUIRE(profiles.size() == 12);
  int pd = 0, hc = 0;
  for (const auto& p : profiles) {
    if (p.group == Group::PD) {
      ++pd;
      CHECK(p.tremor_amplitude > 0.0);
      CHECK(p.walk_speed_off <= p.walk_speed_on);
      CHECK(p.demographics.updrs_off >= p.demographics.updrs_on);
    } else {
      ++hc;
      CHECK(p.tremor_amplitude == 0.0);
    }
  }
  CHECK(pd == 6);
  CHECK(hc == 6);
}

TEST_CASE("schedules contain exactly one OFF window") {
  for (int days : {1, 5}) {
    auto s = make_schedule("P01", days, 3);
    CHECK(static_cast<int>(s.windows.size()) == 4 * days);
    int off = 0;
    for (const auto& w : s.windows) {
      if (w.state == MedState::Off) ++off;
    }
    CHECK(off == 1);
  }
}

TEST_CASE("trajectory rejects non-positive duration") {
  HouseLayout layout = build_default_layout();
  CHECK_THROWS(simulate_trajectory(test_pd_profile(), nullptr, layout, 0.0, 1));
}

TEST_CASE("trajectory truth is consistent with geometry and hub topology") {
  HouseLayout layout = build_default_layout();
  ParticipantProfile p = test_pd_profile();
  Trajectory traj = simulate_trajectory(p, nullptr, layout, 3600.0, 42);
  REQUIRE(traj.positions.size() == traj.truth.size());
  REQUIRE(traj.positions.size() == 3600 * 5);

  for (std::size_t i = 0; i < traj.positions.size(); ++i) {
    Point pos{traj.positions[i].x, traj.positions[i].y};
    CHECK(traj.truth[i].room == layout.room_at(pos));
  }

  // Motion is continuous: room changes only between regions that share a
  // boundary in the fixed floor plan.
  auto touching = [](Room a, Room b) {
    auto key = [](Room x, Room y) {
      int i = static_cast<int>(x), j = static_cast<int>(y);
      return i < j ? i * 10 + j : j * 10 + i;
    };
    static const std::set<int> ok = {
        key(Room::Kitchen, Room::Hallway), key(Room::Dining, Room::Hallway),
        key(Room::Living, Room::Hallway),  key(Room::Stairs, Room::Hallway),
        key(Room::Porch, Room::Hallway),   key(Room::Kitchen, Room::Dining),
        key(Room::Living, Room::Stairs),   key(Room::Stairs, Room::Porch)};
    return ok.count(key(a, b)) > 0;
  };
  bool saw_hallway = false;
  for (std::size_t k = 1; k < traj.truth.size(); ++k) {
    if (traj.truth[k].room == Room::Hallway) saw_hallway = true;
    if (traj.truth[k].room != traj.truth[k - 1].room) {
      CHECK(touching(traj.truth[k].room, traj.truth[k - 1].room));
    }
  }
  CHECK(saw_hallway);
}

TEST_CASE("same seed reproduces the trajectory exactly") {
  HouseLayout layout = build_default_layout();
  ParticipantProfile p = test_pd_profile();
  Trajectory a = simulate_trajectory(p, nullptr, layout, 600.0, 9);
  Trajectory b = simulate_trajectory(p, nullptr, layout, 600.0, 9);
  REQUIRE(a.positions.size() == b.positions.size());
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    CHECK(a.positions[i].x == b.positions[i].x);
    CHECK(a.positions[i].y == b.positions[i].y);
    CHECK(a.truth[i].room == b.truth[i].room);
  }
}

TEST_CASE("OFF traversals take about twice as long at half speed") {
  HouseLayout layout = build_default_layout();
  ParticipantProfile p = test_pd_profile();  // off speed = on speed / 2

  MedicationSchedule all_off;
  all_off.participant = p.id;
  for (int slot = 0; slot < 4; ++slot) all_off.windows.push_back({0, slot, MedState::Off});

  double duration = 4.0 * 3600.0;
  Trajectory on = simulate_trajectory(p, nullptr, layout, duration, 5);
  Trajectory off = simulate_trajectory(p, &all_off, layout, duration, 5);

  auto on_runs = hallway_run_durations(on.truth);
  auto off_runs = hallway_run_durations(off.truth);
  REQUIRE(on_runs.size() >= 200);
  REQUIRE(off_runs.size() >= 200);

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  double ratio = mean_of(off_runs) / mean_of(on_runs);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("rssi matches the closed-form path loss without shadowing") {
  HouseLayout layout = build_default_layout();
  RadioConfig radio;
  radio.shadowing_db = 0.0;

  std::vector<PositionSample> positions{{0, 2.0, 2.0, 0.0}};
  auto packets = synthesize_rssi(positions, layout, radio, 1);
  REQUIRE(!packets.empty());
  for (const auto& pkt : packets) {
    Point wp{positions[0].x + (pkt.wearable == 0 ? -0.3 : 0.3), positions[0].y};
    Point ap = layout.ap_positions[pkt.ap];
    double dist = std::max(radio.d0_m, std::hypot(wp.x - ap.x, wp.y - ap.y));
    double expected = radio.p0_dbm - 10.0 * radio.exponent * std::log10(dist / radio.d0_m) -
                      layout.walls_between(wp, ap) * radio.wall_db;
    CHECK(pkt.dbm == doctest::Approx(expected).epsilon(1e-5));
    CHECK(pkt.dbm >= radio.floor_dbm);
  }
}

TEST_CASE("reception floor produces missing channels") {
  HouseLayout layout = build_default_layout();
  RadioConfig radio;
  radio.shadowing_db = 0.0;
  radio.floor_dbm = -50.0;  // strict floor: only nearby APs remain

  std::vector<PositionSample> positions{{0, 1.0, 1.0, 0.0}};
  auto packets = synthesize_rssi(positions, layout, radio, 1);
  std::set<int> seen;
  for (const auto& pkt : packets) seen.insert(pkt.ap);
  CHECK(seen.size() < 10);
  CHECK(!seen.empty());
}

TEST_CASE("still HC wearer with zero noise reads pure gravity") {
  ParticipantProfile hc;
  hc.id = "H99";
  hc.group = Group::HC;
  hc.tremor_amplitude = 0.0;

  Trajectory traj;
  for (int i = 0; i < 50; ++i) {
    traj.positions.push_back({i * kRssiTickMs, 8.0, 2.5, 0.0});  // living room
    traj.truth.push_back({i * kRssiTickMs, Room::Living});
  }
  SimConfig cfg;
  cfg.accel_noise = 0.0;
  auto samples = synthesize_accel(traj, hc, nullptr, cfg, 3);
  REQUIRE(samples.size() == traj.positions.size() * 6 * 2);
  for (const auto& s : samples) {
    CHECK(s.x == doctest::Approx(0.0));
    CHECK(s.y == doctest::Approx(0.0));
    CHECK(s.z == doctest::Approx(9.81));
  }
}

TEST_CASE("tremor adds 4-6 Hz band power missing from HC output") {
  Trajectory traj;
  for (int i = 0; i < 300; ++i) {
    traj.positions.push_back({i * kRssiTickMs, 8.0, 2.5, 0.0});
    traj.truth.push_back({i * kRssiTickMs, Room::Living});
  }
  SimConfig cfg;
  cfg.accel_noise = 0.0;

  ParticipantProfile pd = test_pd_profile();
  ParticipantProfile hc = pd;
  hc.group = Group::HC;
  hc.tremor_amplitude = 0.0;

  auto collect_x = [](const std::vector<AccelSample>& samples) {
    std::vector<double> x;
    for (const auto& s : samples) {
      if (s.wearable == 0) x.push_back(s.x);
    }
    return x;
  };
  auto pd_x = collect_x(synthesize_accel(traj, pd, nullptr, cfg, 3));
  auto hc_x = collect_x(synthesize_accel(traj, hc, nullptr, cfg, 3));

  double pd_power = band_power(pd_x, 4.0, 6.0, kAccelHz);
  double hc_power = band_power(hc_x, 4.0, 6.0, kAccelHz);
  CHECK(pd_power > 100.0 * (hc_power + 1e-9));
}

TEST_CASE("walking oscillation peaks near 2 Hz") {
  Trajectory traj;
  for (int i = 0; i < 300; ++i) {
    traj.positions.push_back({i * kRssiTickMs, 5.0, 4.5, 1.2});  // walking
    traj.truth.push_back({i * kRssiTickMs, Room::Hallway});
  }
  SimConfig cfg;
  cfg.accel_noise = 0.0;
  ParticipantProfile hc;
  hc.group = Group::HC;
  hc.tremor_amplitude = 0.0;

  auto samples = synthesize_accel(traj, hc, nullptr, cfg, 3);
  std::vector<double> x;
  for (const auto& s : samples) {
    if (s.wearable == 0) x.push_back(s.x);
  }
  double walk_band = band_power(x, 1.5, 2.5, kAccelHz);
  double rest = band_power(x, 3.0, 10.0, kAccelHz);
  CHECK(walk_band > 10.0 * (rest + 1e-9));
}

TEST_CASE("cohorts have the documented arity and round-trip losslessly") {
  SimConfig cfg;
  cfg.n_pairs = 1;
  cfg.days = 1;
  cfg.coverage_min_per_day = 4.0;
  Cohort cohort = generate_cohort(cfg, 21);
  CHECK(cohort.traces.size() == 2);
  CHECK(cohort.schedules.size() == 1);
  CHECK(cohort.schedules[0].windows.size() == 4);

  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "mdcsa_test_cohort";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_cohort(cohort, dir.string());
  Cohort loaded = load_cohort(dir.string());

  REQUIRE(loaded.traces.size() == cohort.traces.size());
  for (std::size_t i = 0; i < cohort.traces.size(); ++i) {
    const auto& a = cohort.traces[i];
    const auto& b = loaded.traces[i];
    CHECK(a.participant == b.participant);
    REQUIRE(a.rssi_packets.size() == b.rssi_packets.size());
    REQUIRE(a.truth.size() == b.truth.size());
    for (std::size_t k = 0; k < a.truth.size(); ++k) {
      CHECK(a.truth[k].t_ms == b.truth[k].t_ms);
      CHECK(a.truth[k].room == b.truth[k].room);
    }
    for (std::size_t k = 0; k < a.rssi_packets.size(); k += 997) {
      CHECK(a.rssi_packets[k].dbm == b.rssi_packets[k].dbm);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("identical seeds give identical cohorts") {
  SimConfig cfg;
  cfg.n_pairs = 1;
  cfg.days = 1;
  cfg.coverage_min_per_day = 4.0;
  Cohort a = generate_cohort(cfg, 77);
  Cohort b = generate_cohort(cfg, 77);
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    REQUIRE(a.traces[i].rssi_packets.size() == b.traces[i].rssi_packets.size());
    for (std::size_t k = 0; k < a.traces[i].rssi_packets.size(); ++k) {
      CHECK(a.traces[i].rssi_packets[k].dbm == b.traces[i].rssi_packets[k].dbm);
    }
  }
}

TEST_CASE("room_at_time reads a run-length-encoded stream") {
  std::vector<RoomStep> rle{{0, Room::Kitchen}, {1000, Room::Hallway}, {2000, Room::Living}};
  CHECK(room_at_time(rle, 0) == Room::Kitchen);
  CHECK(room_at_time(rle, 999) == Room::Kitchen);
  CHECK(room_at_time(rle, 1000) == Room::Hallway);
  CHECK(room_at_time(rle, 5000) == Room::Living);
}
