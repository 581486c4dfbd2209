#include "doctest.h"

#include <cmath>
#include <random>

#include "mdcsa/medstate.hpp"

using namespace mdcsa;

namespace {

// OFF slots show long transitions, ON slots short ones.
std::vector<MedSample> synthetic_cohort(int n_participants, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.2);
  std::vector<MedSample> samples;
  for (int p = 0; p < n_participants; ++p) {
    for (int slot = 0; slot < 8; ++slot) {
      MedSample s;
      s.participant = "P" + std::to_string(p);
      s.label = slot == 0 ? 1 : 0;
      double base = s.label ? 6.0 : 2.0;
      for (int f = 0; f < 3; ++f) s.features.push_back(base + noise(rng));
      for (int f = 0; f < 3; ++f) s.features.push_back(3.0 + noise(rng));
      samples.push_back(s);
    }
  }
  return samples;
}

}  // namespace

TEST_CASE("gait rows map to six features with the off label") {
  GaitFeatureRow r;
  r.participant = "P01";
  r.mean_duration = {1.0, 2.0, 3.0};
  r.count = {4, 5, 6};
  r.state = MedState::Off;
  GaitFeatureRow r2 = r;
  r2.state = MedState::On;

  auto samples = samples_from_gait({r, r2});
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].participant == "P01");
  CHECK(samples[0].features ==
        std::vector<double>({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  CHECK(samples[0].label == 1);
  CHECK(samples[1].label == 0);
}

TEST_CASE("demographic samples are one per slot and state-matched") {
  ParticipantProfile p;
  p.id = "P01";
  p.group = Group::PD;
  p.demographics.age = 70.0;
  p.demographics.gender = 1;
  p.demographics.years_since_diagnosis = 8.0;
  p.demographics.updrs_on = 25.0;
  p.demographics.updrs_off = 40.0;

  MedicationSchedule s;
  s.participant = "P01";
  for (int i = 0; i < 8; ++i) {
    s.windows.push_back({i / 4, i % 4, i == 5 ? MedState::Off : MedState::On});
  }

  auto with = samples_from_demographics(p, s, 2, true);
  REQUIRE(with.size() == 8);
  CHECK(with[0].features == std::vector<double>({70.0, 1.0, 8.0, 25.0}));
  CHECK(with[0].label == 0);
  CHECK(with[5].features == std::vector<double>({70.0, 1.0, 8.0, 40.0}));
  CHECK(with[5].label == 1);

  auto without = samples_from_demographics(p, s, 2, false);
  REQUIRE(without.size() == 8);
  CHECK(without[0].features.size() == 3);
  // Without UPDRS every sample of a participant is identical.
  CHECK(without[0].features == without[5].features);
}

TEST_CASE("feature normalisation is a per-feature z-score") {
  std::vector<MedSample> samples;
  for (double v : {1.0, 3.0}) {
    MedSample s;
    s.features = {v, 7.0};  // second feature degenerate
    samples.push_back(s);
  }
  auto stats = fit_feature_stats(samples);
  CHECK(stats.mean[0] == doctest::Approx(2.0));
  CHECK(stats.std[0] == doctest::Approx(1.0));
  CHECK(stats.std[1] == doctest::Approx(1.0));  // clamped

  MedSample probe;
  probe.features = {3.0, 7.0};
  apply_feature_stats(stats, probe);
  CHECK(probe.features[0] == doctest::Approx(1.0));
  CHECK(probe.features[1] == doctest::Approx(0.0));
}

TEST_CASE("single-class training sets are rejected") {
  std::mt19937_64 rng(1);
  auto samples = synthetic_cohort(3, rng);
  for (auto& s : samples) s.label = 0;
  ForestConfig cfg;
  CHECK_THROWS(train_med_classifier(samples, cfg, 1));
}

TEST_CASE("the classifier separates a clean synthetic cohort") {
  std::mt19937_64 rng(2);
  auto samples = synthetic_cohort(6, rng);
  ForestConfig cfg;
  cfg.n_trees = 40;

  auto clf = train_med_classifier(samples, cfg, 3);
  auto metrics = evaluate_med(clf, samples);
  CHECK(metrics.f1 > 0.9);
  CHECK(metrics.auroc > 0.95);
}

TEST_CASE("auroc is undefined on a one-class test set") {
  std::mt19937_64 rng(3);
  auto samples = synthetic_cohort(4, rng);
  ForestConfig cfg;
  cfg.n_trees = 20;
  auto clf = train_med_classifier(samples, cfg, 5);

  std::vector<MedSample> on_only;
  for (const auto& s : samples) {
    if (s.label == 0) on_only.push_back(s);
  }
  auto metrics = evaluate_med(clf, on_only);
  CHECK(std::isnan(metrics.auroc));
  CHECK(metrics.f1 >= 0.0);
}

TEST_CASE("leave-one-participant-out protocol") {
  std::mt19937_64 rng(4);
  auto samples = synthetic_cohort(5, rng);
  ForestConfig cfg;
  cfg.n_trees = 30;

  auto result = run_med_protocol(samples, cfg, 11);
  REQUIRE(result.folds.size() == 5);
  for (const auto& f : result.folds) {
    CHECK(!f.participant.empty());
    CHECK(f.f1 > 0.8);
    CHECK(f.auroc > 0.9);
  }
  CHECK(result.mean_auroc > 0.9);

  // Deterministic under the same seed.
  auto again = run_med_protocol(samples, cfg, 11);
  for (std::size_t i = 0; i < result.folds.size(); ++i) {
    CHECK(result.folds[i].f1 == again.folds[i].f1);
    CHECK(result.folds[i].auroc == again.folds[i].auroc);
  }
}

TEST_CASE("the protocol needs at least two participants") {
  std::mt19937_64 rng(5);
  auto samples = synthetic_cohort(1, rng);
  ForestConfig cfg;
  CHECK_THROWS(run_med_protocol(samples, cfg, 1));
}
