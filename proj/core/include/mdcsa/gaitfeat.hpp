#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mdcsa/simhome.hpp"

namespace mdcsa {

/// The three tracked room pairs, in fixed feature order.
inline constexpr int kNumPairs = 3;
inline constexpr double kTransitionCapS = 60.0;

/// 0 Kitchen-Dining, 1 Kitchen-Living, 2 Dining-Living; -1 otherwise.
int pair_index(Room a, Room b);
const char* pair_name(int pair);

/// A hallway-mediated passage between two tracked rooms. Direction-agnostic:
/// from/to are stored in canonical (lower room id first) order.
struct Transition {
  Room from = Room::Kitchen;
  Room to = Room::Living;
  std::int64_t start_ms = 0;  // first hallway step
  std::int64_t end_ms = 0;    // first step in the destination room
  double duration_s = 0.0;    // hallway dwell, steps x 0.2 s

  int pair() const { return pair_index(from, to); }
};

/// Maximal hallway runs bounded by two distinct tracked rooms become
/// transitions; runs longer than 60 s, runs touching stairs/porch on either
/// side, and runs returning to the same room are discarded.
std::vector<Transition> extract_transitions(const std::vector<Room>& steps,
                                            std::int64_t start_ms = 0);

/// Same contract over a run-length-encoded truth stream (entries at change
/// points, trace ends at end_ms).
std::vector<Transition> transitions_from_rle(const std::vector<RoomStep>& rle,
                                             std::int64_t end_ms);

/// One 4-hour slot of one participant-day: per-pair mean duration and count.
struct GaitFeatureRow {
  std::string participant;
  int day = 0;
  int slot = 0;  // 0..3 within 06:00-22:00
  std::array<double, kNumPairs> mean_duration{};  // seconds; 60 when count 0
  std::array<int, kNumPairs> count{};
  MedState state = MedState::On;
};

/// 4 slots x days rows. Pairs with no transitions in a slot get count 0 and
/// the 60 s cap as mean. Schedule may be null (HC): all rows ON.
std::vector<GaitFeatureRow> aggregate_features(const std::vector<Transition>& transitions,
                                               const std::string& participant,
                                               const MedicationSchedule* schedule,
                                               int days);

/// Per-pair mean and (population) sd of captured transition durations;
/// n = 0 marks the N/A convention for uncaptured pairs.
struct TransitionTable {
  std::array<double, kNumPairs> mean{};
  std::array<double, kNumPairs> sd{};
  std::array<int, kNumPairs> n{};
};

TransitionTable mean_transition_table(const std::vector<Transition>& transitions);

// Comma-separated feature file (versioned header).
void save_gait_features(const std::vector<GaitFeatureRow>& rows, const std::string& path);
std::vector<GaitFeatureRow> load_gait_features(const std::string& path);

}  // namespace mdcsa
