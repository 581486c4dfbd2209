#include "mdcsa/gaitfeat.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mdcsa {

int pair_index(Room a, Room b) {
  auto key = [](Room x, Room y) {
    int i = static_cast<int>(x), j = static_cast<int>(y);
    return i < j ? i * 10 + j : j * 10 + i;
  };
  switch (key(a, b)) {
    case 2: return 0;   // Kitchen-Dining
    case 3: return 1;   // Kitchen-Living
    case 23: return 2;  // Dining-Living
    default: return -1;
  }
}

const char* pair_name(int pair) {
  switch (pair) {
    case 0: return "Kitch-Dinin";
    case 1: return "Kitch-Livin";
    case 2: return "Dinin-Livin";
    default: return "?";
  }
}

namespace {

void maybe_emit(std::vector<Transition>& out, Room before, Room after,
                std::int64_t start_ms, std::int64_t end_ms, double duration_s) {
  if (before == after) return;
  if (pair_index(before, after) < 0) return;
  if (duration_s <= 0.0 || duration_s > kTransitionCapS) return;
  Transition tr;
  tr.from = static_cast<int>(before) < static_cast<int>(after) ? before : after;
  tr.to = static_cast<int>(before) < static_cast<int>(after) ? after : before;
  tr.start_ms = start_ms;
  tr.end_ms = end_ms;
  tr.duration_s = duration_s;
  out.push_back(tr);
}

}  // namespace

std::vector<Transition> extract_transitions(const std::vector<Room>& steps,
                                            std::int64_t start_ms) {
  std::vector<Transition> out;
  std::size_t n = steps.size();
  std::size_t i = 0;
  while (i < n) {
    if (steps[i] != Room::Hallway) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && steps[j] == Room::Hallway) ++j;
    if (i > 0 && j < n) {
      double duration = static_cast<double>(j - i) * 0.2;
      maybe_emit(out, steps[i - 1], steps[j],
                 start_ms + static_cast<std::int64_t>(i) * kRssiTickMs,
                 start_ms + static_cast<std::int64_t>(j) * kRssiTickMs, duration);
    }
    i = j;
  }
  return out;
}

std::vector<Transition> transitions_from_rle(const std::vector<RoomStep>& rle,
                                             std::int64_t end_ms) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < rle.size(); ++i) {
    if (rle[i].room != Room::Hallway) continue;
    if (i == 0 || i + 1 >= rle.size()) continue;
    std::int64_t seg_end = rle[i + 1].t_ms;
    if (seg_end > end_ms) continue;
    auto ticks = (seg_end - rle[i].t_ms) / kRssiTickMs;
    maybe_emit(out, rle[i - 1].room, rle[i + 1].room, rle[i].t_ms, seg_end,
               static_cast<double>(ticks) * 0.2);
  }
  return out;
}

std::vector<GaitFeatureRow> aggregate_features(const std::vector<Transition>& transitions,
                                               const std::string& participant,
                                               const MedicationSchedule* schedule,
                                               int days) {
  if (days <= 0) throw std::invalid_argument("days must be positive");
  struct Bucket {
    std::array<double, kNumPairs> sum{};
    std::array<int, kNumPairs> count{};
  };
  std::vector<Bucket> buckets(static_cast<std::size_t>(days) * 4);
  for (const auto& tr : transitions) {
    int day = static_cast<int>(tr.start_ms / kDayMs);
    int slot = static_cast<int>((tr.start_ms % kDayMs) / kSlotMs);
    if (day < 0 || day >= days) continue;
    auto& b = buckets[static_cast<std::size_t>(day) * 4 + static_cast<std::size_t>(slot)];
    int p = tr.pair();
    b.sum[static_cast<std::size_t>(p)] += tr.duration_s;
    b.count[static_cast<std::size_t>(p)]++;
  }

  std::vector<GaitFeatureRow> rows;
  rows.reserve(buckets.size());
  for (int day = 0; day < days; ++day) {
    for (int slot = 0; slot < 4; ++slot) {
      const auto& b = buckets[static_cast<std::size_t>(day) * 4 + static_cast<std::size_t>(slot)];
      GaitFeatureRow row;
      row.participant = participant;
      row.day = day;
      row.slot = slot;
      for (std::size_t p = 0; p < kNumPairs; ++p) {
        row.count[p] = b.count[p];
        row.mean_duration[p] =
            b.count[p] > 0 ? b.sum[p] / b.count[p] : kTransitionCapS;
      }
      row.state = schedule ? schedule->state_at(day, slot) : MedState::On;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

TransitionTable mean_transition_table(const std::vector<Transition>& transitions) {
  TransitionTable table;
  std::array<double, kNumPairs> sum{};
  for (const auto& tr : transitions) {
    std::size_t p = static_cast<std::size_t>(tr.pair());
    sum[p] += tr.duration_s;
    table.n[p]++;
  }
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    if (table.n[p] == 0) continue;
    table.mean[p] = sum[p] / table.n[p];
  }
  for (const auto& tr : transitions) {
    std::size_t p = static_cast<std::size_t>(tr.pair());
    double d = tr.duration_s - table.mean[p];
    table.sd[p] += d * d;
  }
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    if (table.n[p] > 0) table.sd[p] = std::sqrt(table.sd[p] / table.n[p]);
  }
  return table;
}

void save_gait_features(const std::vector<GaitFeatureRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# mdcsa-gait v1\n";
  out << "participant,day,slot,mean_kd,mean_kl,mean_dl,count_kd,count_kl,count_dl,state\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.participant << ',' << r.day << ',' << r.slot;
    for (std::size_t p = 0; p < kNumPairs; ++p) {
      std::snprintf(buf, sizeof(buf), "%.9g", r.mean_duration[p]);
      out << ',' << buf;
    }
    for (std::size_t p = 0; p < kNumPairs; ++p) out << ',' << r.count[p];
    out << ',' << (r.state == MedState::On ? "ON" : "OFF") << '\n';
  }
}

std::vector<GaitFeatureRow> load_gait_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# mdcsa-gait v1") {
    throw std::runtime_error(path + ": not a gait feature file");
  }
  std::getline(in, line);  // column header
  std::vector<GaitFeatureRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    GaitFeatureRow r;
    std::getline(ss, r.participant, ',');
    std::getline(ss, field, ',');
    r.day = std::stoi(field);
    std::getline(ss, field, ',');
    r.slot = std::stoi(field);
    for (std::size_t p = 0; p < kNumPairs; ++p) {
      std::getline(ss, field, ',');
      r.mean_duration[p] = std::stod(field);
    }
    for (std::size_t p = 0; p < kNumPairs; ++p) {
      std::getline(ss, field, ',');
      r.count[p] = std::stoi(field);
    }
    std::getline(ss, field, ',');
    r.state = field == "OFF" ? MedState::Off : MedState::On;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mdcsa
