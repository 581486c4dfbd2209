#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdcsa/forest.hpp"
#include "mdcsa/metrics.hpp"
#include "mdcsa/net.hpp"
#include "mdcsa/pipeline.hpp"

namespace mdcsa {

struct TrainConfig {
  int d = 128;
  int epochs = 200;
  double lr = 0.01;
  double dropout = 0.15;
  int batch_size = 32;
  int patience = 20;   // evaluations without validation improvement
  std::uint64_t seed = 0;
  int max_steps = 0;   // 0 = bounded by epochs only

  void validate() const;
};

/// The hyperparameter grid searched per variant.
std::vector<TrainConfig> default_grid();

enum class Protocol { AllHc, LooHc, LooPd, FourMinHc, FourMinPd };
const char* protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(const std::string& name);

enum class Variant { Mdcsa, Mdcsa4Aps, MdcsaRssi, Mdcsa4ApsRssi, Rf };
const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

struct FoldReport {
  std::string protocol;
  std::string variant;
  int fold = 0;
  std::string train_participant;  // empty for ALL-HC
  double precision = 0.0;
  double f1 = 0.0;
};

struct ParticipantData {
  std::string id;
  Group group = Group::HC;
  std::vector<SensorWindow> windows;  // chronological
};

struct Fold {
  int id = 0;
  std::vector<std::string> train_participants;
  std::vector<std::string> test_participants;  // PD only
  int train_window_budget = 0;                 // 0 = unlimited, 48 for 4m-*
};

/// Fold definitions for a cohort. Test sets are every PD participant except
/// any PD participant trained on.
std::vector<Fold> make_folds(Protocol protocol,
                             const std::vector<ParticipantData>& cohort);

/// Sequence NLL under the CRF plus one windowwise-averaged hallway BCE term.
/// Scalar oracle mirroring the training-graph loss.
double combined_loss(const Matrix& emissions, const std::vector<int>& gold,
                     const TransitionMatrix& trans,
                     const std::vector<double>& hallway_logits,
                     const std::vector<int>& hallway_truth);

struct TrainResult {
  MdcsaNet net;                   // best-on-validation weights
  std::vector<double> loss_trace; // mean per-window loss per step
  double best_val_f1 = 0.0;
  int steps = 0;
  int epochs_run = 0;
};

/// RAdam + Look-Ahead training of the combined loss with early stopping on
/// validation weighted F1. Throws on divergence (non-finite loss).
TrainResult train_model(const std::vector<SensorWindow>& train,
                        const std::vector<SensorWindow>& val,
                        MdcsaConfig net_config, const TrainConfig& config);

/// Validation weighted F1 of a trained net over a window set.
WeightedMetrics evaluate_windows(const MdcsaNet& net,
                                 const std::vector<SensorWindow>& windows);

/// Index of the grid entry with the best mean validation F1 across the given
/// train/val splits; ties go to the earliest entry.
std::size_t grid_search(const std::vector<TrainConfig>& grid,
                        const std::vector<std::pair<std::vector<SensorWindow>,
                                                    std::vector<SensorWindow>>>& splits,
                        MdcsaConfig net_config);

// Random-forest baseline over flattened windows: one label per window (mode
// of its step labels, ties to the lowest room index), broadcast per step.
std::vector<double> flatten_window(const SensorWindow& window);
int window_mode_label(const SensorWindow& window);
RandomForest rf_fit(const std::vector<SensorWindow>& windows,
                    const ForestConfig& config, std::uint64_t seed);
std::vector<int> rf_predict(const RandomForest& forest, const SensorWindow& window);

struct ProtocolRun {
  Protocol protocol = Protocol::AllHc;
  Variant variant = Variant::Mdcsa;
  TrainConfig train;
  ForestConfig forest;                       // rf variant only
  int max_train_windows = 0;                 // cap after budget, 0 = none
  int max_test_windows_per_participant = 0;  // 0 = none
  int jobs = 1;
  std::uint64_t seed = 0;
  std::string checkpoint_dir;                // net checkpoints per fold when set
};

/// Runs one fold (exposed so callers can resume fold by fold).
FoldReport run_fold(const std::vector<ParticipantData>& cohort, const ProtocolRun& run,
                    const Fold& fold, std::uint64_t fold_seed);

struct ProtocolResult {
  std::vector<FoldReport> folds;
  double mean_precision = 0.0, sd_precision = 0.0;
  double mean_f1 = 0.0, sd_f1 = 0.0;
};

/// Runs every fold of a protocol for one variant: variant masking, training
/// split normalization, model fit, room metrics over the PD test windows.
ProtocolResult run_protocol(const std::vector<ParticipantData>& cohort,
                            const ProtocolRun& run);

// Comma-separated fold-report table (versioned header).
void save_fold_reports(const std::vector<FoldReport>& reports, const std::string& path);
std::vector<FoldReport> load_fold_reports(const std::string& path);

}  // namespace mdcsa
