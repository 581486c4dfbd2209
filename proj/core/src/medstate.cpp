#include "mdcsa/medstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdcsa/metrics.hpp"

namespace mdcsa {

std::vector<MedSample> samples_from_gait(const std::vector<GaitFeatureRow>& rows) {
  std::vector<MedSample> samples;
  samples.reserve(rows.size());
  for (const auto& r : rows) {
    MedSample s;
    s.participant = r.participant;
    for (std::size_t p = 0; p < kNumPairs; ++p) s.features.push_back(r.mean_duration[p]);
    for (std::size_t p = 0; p < kNumPairs; ++p) s.features.push_back(static_cast<double>(r.count[p]));
    s.label = r.state == MedState::Off ? 1 : 0;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<MedSample> samples_from_demographics(const ParticipantProfile& profile,
                                                 const MedicationSchedule& schedule,
                                                 int days, bool include_updrs) {
  std::vector<MedSample> samples;
  for (int day = 0; day < days; ++day) {
    for (int slot = 0; slot < 4; ++slot) {
      MedState state = schedule.state_at(day, slot);
      MedSample s;
      s.participant = profile.id;
      s.features = {profile.demographics.age,
                    static_cast<double>(profile.demographics.gender),
                    profile.demographics.years_since_diagnosis};
      if (include_updrs) {
        s.features.push_back(state == MedState::On ? profile.demographics.updrs_on
                                                   : profile.demographics.updrs_off);
      }
      s.label = state == MedState::Off ? 1 : 0;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

FeatureStats fit_feature_stats(const std::vector<MedSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::size_t dim = samples.front().features.size();
  FeatureStats stats;
  stats.mean.assign(dim, 0.0);
  stats.std.assign(dim, 0.0);
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw std::invalid_argument("inconsistent feature size");
    for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += s.features[i];
  }
  for (double& m : stats.mean) m /= static_cast<double>(samples.size());
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < dim; ++i) {
      double d = s.features[i] - stats.mean[i];
      stats.std[i] += d * d;
    }
  }
  for (double& v : stats.std) {
    v = std::sqrt(v / static_cast<double>(samples.size()));
    if (v <= 1e-12) v = 1.0;
  }
  return stats;
}

void apply_feature_stats(const FeatureStats& stats, MedSample& sample) {
  for (std::size_t i = 0; i < sample.features.size(); ++i) {
    sample.features[i] = (sample.features[i] - stats.mean[i]) / stats.std[i];
  }
}

RandomForest train_med_classifier(const std::vector<MedSample>& samples,
                                  const ForestConfig& config, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("no training samples");
  double n_off = 0.0;
  for (const auto& s : samples) n_off += s.label;
  double n_on = static_cast<double>(samples.size()) - n_off;
  if (n_off == 0.0 || n_on == 0.0) {
    throw std::invalid_argument("training set must contain both ON and OFF samples");
  }

  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<double> weights;
  double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    X.push_back(s.features);
    y.push_back(s.label);
    weights.push_back(n / (2.0 * (s.label ? n_off : n_on)));
  }
  RandomForest forest(config);
  forest.fit(X, y, seed, &weights);
  return forest;
}

MedMetrics evaluate_med(const RandomForest& classifier,
                        const std::vector<MedSample>& test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  std::vector<int> pred, truth;
  std::vector<double> scores;
  for (const auto& s : test) {
    auto votes = classifier.vote_fractions(s.features);
    double off_score = votes.size() > 1 ? votes[1] : 0.0;
    scores.push_back(off_score);
    pred.push_back(off_score >= 0.5 ? 1 : 0);
    truth.push_back(s.label);
  }
  MedMetrics m;
  m.f1 = weighted_metrics(pred, truth).f1;
  m.auroc = auroc(scores, truth);
  return m;
}

MedResult run_med_protocol(const std::vector<MedSample>& samples,
                           const ForestConfig& config, std::uint64_t seed) {
  std::vector<std::string> participants;
  for (const auto& s : samples) {
    if (std::find(participants.begin(), participants.end(), s.participant) ==
        participants.end()) {
      participants.push_back(s.participant);
    }
  }
  if (participants.size() < 2) {
    throw std::invalid_argument("leave-one-participant-out needs at least 2 participants");
  }

  SeedStream seeds(seed);
  MedResult result;
  std::vector<double> f1s, aurocs;
  for (std::size_t fold = 0; fold < participants.size(); ++fold) {
    const std::string& held_out = participants[fold];
    std::vector<MedSample> train, test;
    for (const auto& s : samples) {
      (s.participant == held_out ? test : train).push_back(s);
    }
    FeatureStats stats = fit_feature_stats(train);
    for (auto& s : train) apply_feature_stats(stats, s);
    for (auto& s : test) apply_feature_stats(stats, s);

    RandomForest forest = train_med_classifier(train, config, seeds.derive("fold", fold));
    MedMetrics m = evaluate_med(forest, test);
    result.folds.push_back({held_out, m.f1, m.auroc});
    f1s.push_back(m.f1);
    if (std::isfinite(m.auroc)) aurocs.push_back(m.auroc);
  }
  result.mean_f1 = mean(f1s);
  result.sd_f1 = stddev(f1s);
  if (!aurocs.empty()) {
    result.mean_auroc = mean(aurocs);
    result.sd_auroc = stddev(aurocs);
  } else {
    result.mean_auroc = std::numeric_limits<double>::quiet_NaN();
    result.sd_auroc = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace mdcsa
