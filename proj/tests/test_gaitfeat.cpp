#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mdcsa/gaitfeat.hpp"

using namespace mdcsa;

namespace {

std::vector<Room> sequence(std::initializer_list<std::pair<Room, int>> runs) {
  std::vector<Room> steps;
  for (const auto& [room, n] : runs) {
    steps.insert(steps.end(), static_cast<std::size_t>(n), room);
  }
  return steps;
}

std::vector<RoomStep> to_rle(const std::vector<Room>& steps, std::int64_t start_ms) {
  std::vector<RoomStep> rle;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i == 0 || steps[i] != steps[i - 1]) {
      rle.push_back({start_ms + static_cast<std::int64_t>(i) * kRssiTickMs, steps[i]});
    }
  }
  return rle;
}

}  // namespace

TEST_CASE("pair indexing covers the three tracked pairs") {
  CHECK(pair_index(Room::Kitchen, Room::Dining) == 0);
  CHECK(pair_index(Room::Dining, Room::Kitchen) == 0);
  CHECK(pair_index(Room::Kitchen, Room::Living) == 1);
  CHECK(pair_index(Room::Living, Room::Kitchen) == 1);
  CHECK(pair_index(Room::Dining, Room::Living) == 2);
  CHECK(pair_index(Room::Living, Room::Dining) == 2);
  CHECK(pair_index(Room::Kitchen, Room::Stairs) == -1);
  CHECK(pair_index(Room::Living, Room::Porch) == -1);
  CHECK(pair_index(Room::Kitchen, Room::Kitchen) == -1);
  CHECK(std::string(pair_name(0)).find("Kitch") != std::string::npos);
}

TEST_CASE("a 25-step hallway run between kitchen and living lasts 5 seconds") {
  auto steps = sequence({{Room::Kitchen, 10}, {Room::Hallway, 25}, {Room::Living, 10}});
  auto ts = extract_transitions(steps, 0);
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].from == Room::Kitchen);
  CHECK(ts[0].to == Room::Living);
  CHECK(ts[0].pair() == 1);
  CHECK(ts[0].duration_s == doctest::Approx(5.0));
  CHECK(ts[0].start_ms == 10 * 200);
  CHECK(ts[0].end_ms == 35 * 200);
}

TEST_CASE("direction does not matter") {
  auto forward = extract_transitions(
      sequence({{Room::Dining, 5}, {Room::Hallway, 10}, {Room::Kitchen, 5}}));
  auto backward = extract_transitions(
      sequence({{Room::Kitchen, 5}, {Room::Hallway, 10}, {Room::Dining, 5}}));
  REQUIRE(forward.size() == 1);
  REQUIRE(backward.size() == 1);
  CHECK(forward[0].from == backward[0].from);
  CHECK(forward[0].to == backward[0].to);
  CHECK(forward[0].from == Room::Kitchen);  // canonical lower id first
}

TEST_CASE("overlong hallway runs are discarded") {
  // 301 steps = 60.2 s, above the cap.
  auto steps = sequence({{Room::Kitchen, 5}, {Room::Hallway, 301}, {Room::Living, 5}});
  CHECK(extract_transitions(steps).empty());
  // Exactly 300 steps = 60.0 s passes.
  steps = sequence({{Room::Kitchen, 5}, {Room::Hallway, 300}, {Room::Living, 5}});
  CHECK(extract_transitions(steps).size() == 1);
}

TEST_CASE("untracked endpoints and same-room returns are discarded") {
  CHECK(extract_transitions(
            sequence({{Room::Stairs, 5}, {Room::Hallway, 10}, {Room::Living, 5}}))
            .empty());
  CHECK(extract_transitions(
            sequence({{Room::Kitchen, 5}, {Room::Hallway, 10}, {Room::Porch, 5}}))
            .empty());
  CHECK(extract_transitions(
            sequence({{Room::Kitchen, 5}, {Room::Hallway, 10}, {Room::Kitchen, 5}}))
            .empty());
  // Leading and trailing hallway runs have only one neighbour.
  CHECK(extract_transitions(
            sequence({{Room::Hallway, 10}, {Room::Living, 5}, {Room::Hallway, 8}}))
            .empty());
}

TEST_CASE("multiple transitions in one sequence") {
  auto steps = sequence({{Room::Kitchen, 5},
                         {Room::Hallway, 10},
                         {Room::Living, 5},
                         {Room::Hallway, 20},
                         {Room::Dining, 5}});
  auto ts = extract_transitions(steps, 1000);
  REQUIRE(ts.size() == 2);
  CHECK(ts[0].pair() == 1);
  CHECK(ts[1].pair() == 2);
  CHECK(ts[0].duration_s == doctest::Approx(2.0));
  CHECK(ts[1].duration_s == doctest::Approx(4.0));
  CHECK(ts[0].start_ms == 1000 + 5 * 200);
}

TEST_CASE("the rle extractor agrees with the dense one") {
  std::mt19937_64 rng(33);
  const Room rooms[] = {Room::Kitchen, Room::Hallway, Room::Dining,
                        Room::Living, Room::Stairs, Room::Porch};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Room> steps;
    int segs = 2 + static_cast<int>(rng() % 8);
    for (int s = 0; s < segs; ++s) {
      Room r = rooms[rng() % 6];
      int len = 1 + static_cast<int>(rng() % 40);
      steps.insert(steps.end(), static_cast<std::size_t>(len), r);
    }
    std::int64_t start = static_cast<std::int64_t>(rng() % 1000) * 200;
    auto dense = extract_transitions(steps, start);
    auto rle = transitions_from_rle(
        to_rle(steps, start), start + static_cast<std::int64_t>(steps.size()) * kRssiTickMs);
    REQUIRE(dense.size() == rle.size());
    for (std::size_t i = 0; i < dense.size(); ++i) {
      CHECK(dense[i].from == rle[i].from);
      CHECK(dense[i].to == rle[i].to);
      CHECK(dense[i].start_ms == rle[i].start_ms);
      CHECK(dense[i].end_ms == rle[i].end_ms);
      CHECK(dense[i].duration_s == doctest::Approx(rle[i].duration_s));
    }
  }
}

TEST_CASE("rle segments cut off by the trace end are not transitions") {
  std::vector<RoomStep> rle{{0, Room::Kitchen}, {1000, Room::Hallway}, {3000, Room::Living}};
  // Trace ends while still in the hallway: nothing to extract.
  CHECK(transitions_from_rle(rle, 2000).empty());
  CHECK(transitions_from_rle(rle, 4000).size() == 1);
}

TEST_CASE("aggregation produces 4 slots per day with cap imputation") {
  std::vector<Transition> ts;
  // Two kitchen-living transitions in day 0 slot 0, one kitchen-dining in
  // day 1 slot 2.
  Transition a;
  a.from = Room::Kitchen;
  a.to = Room::Living;
  a.start_ms = 10'000;
  a.end_ms = 14'000;
  a.duration_s = 4.0;
  ts.push_back(a);
  a.start_ms = 200'000;
  a.duration_s = 6.0;
  ts.push_back(a);
  Transition b;
  b.from = Room::Kitchen;
  b.to = Room::Dining;
  b.start_ms = kDayMs + 2 * kSlotMs + 5'000;
  b.duration_s = 2.5;
  ts.push_back(b);

  auto rows = aggregate_features(ts, "P01", nullptr, 2);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(r.participant == "P01");
    CHECK(r.state == MedState::On);  // no schedule
  }
  const auto& first = rows[0];
  CHECK(first.day == 0);
  CHECK(first.slot == 0);
  CHECK(first.count[1] == 2);
  CHECK(first.mean_duration[1] == doctest::Approx(5.0));
  CHECK(first.count[0] == 0);
  CHECK(first.mean_duration[0] == doctest::Approx(60.0));  // cap imputation

  const auto& later = rows[6];  // day 1, slot 2
  CHECK(later.day == 1);
  CHECK(later.slot == 2);
  CHECK(later.count[0] == 1);
  CHECK(later.mean_duration[0] == doctest::Approx(2.5));
}

TEST_CASE("aggregation tags rows with the medication schedule") {
  MedicationSchedule s;
  s.participant = "P01";
  for (int slot = 0; slot < 4; ++slot) {
    s.windows.push_back({0, slot, slot == 2 ? MedState::Off : MedState::On});
  }
  auto rows = aggregate_features({}, "P01", &s, 1);
  REQUIRE(rows.size() == 4);
  CHECK(rows[2].state == MedState::Off);
  CHECK(rows[1].state == MedState::On);
}

TEST_CASE("the transition table reports per-pair moments") {
  std::vector<Transition> ts;
  for (double d : {2.0, 4.0}) {
    Transition t;
    t.from = Room::Kitchen;
    t.to = Room::Living;
    t.duration_s = d;
    ts.push_back(t);
  }
  auto table = mean_transition_table(ts);
  CHECK(table.n[1] == 2);
  CHECK(table.mean[1] == doctest::Approx(3.0));
  CHECK(table.sd[1] == doctest::Approx(1.0));  // population sd
  CHECK(table.n[0] == 0);
  CHECK(table.n[2] == 0);
}

TEST_CASE("gait feature files round-trip") {
  std::vector<GaitFeatureRow> rows;
  GaitFeatureRow r;
  r.participant = "P07";
  r.day = 3;
  r.slot = 2;
  r.mean_duration = {1.25, 60.0, 3.75};
  r.count = {4, 0, 1};
  r.state = MedState::Off;
  rows.push_back(r);
  r.participant = "H02";
  r.state = MedState::On;
  rows.push_back(r);

  auto path = (std::filesystem::temp_directory_path() / "mdcsa_test_gait.csv").string();
  save_gait_features(rows, path);
  auto loaded = load_gait_features(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(loaded[i].participant == rows[i].participant);
    CHECK(loaded[i].day == rows[i].day);
    CHECK(loaded[i].slot == rows[i].slot);
    CHECK(loaded[i].mean_duration == rows[i].mean_duration);
    CHECK(loaded[i].count == rows[i].count);
    CHECK((loaded[i].state == rows[i].state));
  }
}
