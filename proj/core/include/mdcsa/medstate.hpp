#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdcsa/forest.hpp"
#include "mdcsa/gaitfeat.hpp"

namespace mdcsa {

/// One classifier row. Label 1 = OFF (the positive, rare class).
struct MedSample {
  std::string participant;
  std::vector<double> features;
  int label = 0;
};

/// Gait rows to samples: 3 mean durations + 3 counts.
std::vector<MedSample> samples_from_gait(const std::vector<GaitFeatureRow>& rows);

/// Demographic samples mirroring the gait row structure (one per slot):
/// age, gender, years of PD, and optionally the state-matched UPDRS-III
/// score (ON score on ON rows, OFF score on OFF rows).
std::vector<MedSample> samples_from_demographics(const ParticipantProfile& profile,
                                                 const MedicationSchedule& schedule,
                                                 int days, bool include_updrs);

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;  // degenerate features clamped to 1
};

FeatureStats fit_feature_stats(const std::vector<MedSample>& samples);
void apply_feature_stats(const FeatureStats& stats, MedSample& sample);

/// Random forest on normalised features with inverse-frequency sample
/// weights. Rejects single-class training sets.
RandomForest train_med_classifier(const std::vector<MedSample>& samples,
                                  const ForestConfig& config, std::uint64_t seed);

struct MedMetrics {
  double f1 = 0.0;
  double auroc = 0.0;  // NaN when the test set has one class
};

/// Weighted F1 at the 0.5 vote threshold; AUROC over OFF vote fractions.
MedMetrics evaluate_med(const RandomForest& classifier,
                        const std::vector<MedSample>& test);

struct MedFoldReport {
  std::string participant;  // held out
  double f1 = 0.0;
  double auroc = 0.0;
};

struct MedResult {
  std::vector<MedFoldReport> folds;
  double mean_f1 = 0.0, sd_f1 = 0.0;
  double mean_auroc = 0.0, sd_auroc = 0.0;  // over folds with defined AUROC
};

/// Leave-one-participant-out cross-validation; normalisation is fit on each
/// training fold only.
MedResult run_med_protocol(const std::vector<MedSample>& samples,
                           const ForestConfig& config, std::uint64_t seed);

}  // namespace mdcsa
