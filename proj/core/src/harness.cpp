#include "mdcsa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mdcsa/crf.hpp"
#include "mdcsa/optim.hpp"
#include "mdcsa/random.hpp"

namespace mdcsa {

void TrainConfig::validate() const {
  if (d <= 0 || epochs <= 0 || lr <= 0.0 || batch_size <= 0 || patience < 1) {
    throw std::invalid_argument("invalid training configuration");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("dropout must be in [0, 1)");
  }
}

std::vector<TrainConfig> default_grid() {
  std::vector<TrainConfig> grid;
  for (int d : {128, 256}) {
    for (int epochs : {200, 300}) {
      for (double lr : {0.01, 0.0001}) {
        TrainConfig c;
        c.d = d;
        c.epochs = epochs;
        c.lr = lr;
        grid.push_back(c);
      }
    }
  }
  return grid;
}

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::AllHc: return "ALL-HC";
    case Protocol::LooHc: return "LOO-HC";
    case Protocol::LooPd: return "LOO-PD";
    case Protocol::FourMinHc: return "4m-HC";
    case Protocol::FourMinPd: return "4m-PD";
  }
  return "?";
}

std::optional<Protocol> protocol_from_name(const std::string& name) {
  for (Protocol p : {Protocol::AllHc, Protocol::LooHc, Protocol::LooPd,
                     Protocol::FourMinHc, Protocol::FourMinPd}) {
    if (name == protocol_name(p)) return p;
  }
  return std::nullopt;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Mdcsa: return "mdcsa";
    case Variant::Mdcsa4Aps: return "mdcsa-4aps";
    case Variant::MdcsaRssi: return "mdcsa-rssi";
    case Variant::Mdcsa4ApsRssi: return "mdcsa-4aps-rssi";
    case Variant::Rf: return "rf";
  }
  return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  for (Variant v : {Variant::Mdcsa, Variant::Mdcsa4Aps, Variant::MdcsaRssi,
                    Variant::Mdcsa4ApsRssi, Variant::Rf}) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

std::vector<Fold> make_folds(Protocol protocol,
                             const std::vector<ParticipantData>& cohort) {
  std::vector<std::string> hc, pd;
  for (const auto& p : cohort) {
    (p.group == Group::HC ? hc : pd).push_back(p.id);
  }
  if (pd.empty()) throw std::invalid_argument("protocol needs PD participants to test on");

  std::vector<Fold> folds;
  auto pd_except = [&](const std::string& skip) {
    std::vector<std::string> out;
    for (const auto& id : pd) {
      if (id != skip) out.push_back(id);
    }
    return out;
  };

  switch (protocol) {
    case Protocol::AllHc: {
      if (hc.empty()) throw std::invalid_argument("ALL-HC needs HC participants");
      folds.push_back({0, hc, pd, 0});
      break;
    }
    case Protocol::LooHc:
    case Protocol::FourMinHc: {
      if (hc.empty()) throw std::invalid_argument("LOO-HC/4m-HC need HC participants");
      int budget = protocol == Protocol::FourMinHc ? 48 : 0;
      for (std::size_t i = 0; i < hc.size(); ++i) {
        folds.push_back({static_cast<int>(i), {hc[i]}, pd, budget});
      }
      break;
    }
    case Protocol::LooPd:
    case Protocol::FourMinPd: {
      if (pd.size() < 2) throw std::invalid_argument("LOO-PD/4m-PD need at least 2 PD participants");
      int budget = protocol == Protocol::FourMinPd ? 48 : 0;
      for (std::size_t i = 0; i < pd.size(); ++i) {
        folds.push_back({static_cast<int>(i), {pd[i]}, pd_except(pd[i]), budget});
      }
      break;
    }
  }
  return folds;
}

double combined_loss(const Matrix& emissions, const std::vector<int>& gold,
                     const TransitionMatrix& trans,
                     const std::vector<double>& hallway_logits,
                     const std::vector<int>& hallway_truth) {
  if (hallway_logits.size() != hallway_truth.size() || hallway_logits.empty()) {
    throw std::invalid_argument("hallway logits/truth must be equal-length and non-empty");
  }
  double nll = crf_negative_log_likelihood(emissions, gold, trans);
  double bce = 0.0;
  for (std::size_t t = 0; t < hallway_logits.size(); ++t) {
    double l = hallway_logits[t];
    double y = hallway_truth[t] ? 1.0 : 0.0;
    bce += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::fabs(l)));
  }
  bce /= static_cast<double>(hallway_logits.size());
  return nll + bce;
}

namespace {

std::vector<int> gold_labels(const SensorWindow& w) {
  std::vector<int> g(w.labels.size());
  for (std::size_t t = 0; t < g.size(); ++t) g[t] = static_cast<int>(w.labels[t]);
  return g;
}

Matrix hallway_targets(const SensorWindow& w, int referenced_room) {
  Matrix m(static_cast<int>(w.labels.size()), 1);
  for (std::size_t t = 0; t < w.labels.size(); ++t) {
    m.a[t] = static_cast<int>(w.labels[t]) == referenced_room ? 1.0 : 0.0;
  }
  return m;
}

// Even deterministic subsample keeping chronological order.
std::vector<SensorWindow> cap_windows(std::vector<SensorWindow> windows, int cap) {
  if (cap <= 0 || static_cast<int>(windows.size()) <= cap) return windows;
  std::vector<SensorWindow> out;
  out.reserve(static_cast<std::size_t>(cap));
  std::size_t n = windows.size();
  for (int i = 0; i < cap; ++i) {
    out.push_back(windows[static_cast<std::size_t>(i) * n / static_cast<std::size_t>(cap)]);
  }
  return out;
}

}  // namespace

WeightedMetrics evaluate_windows(const MdcsaNet& net,
                                 const std::vector<SensorWindow>& windows) {
  std::vector<int> pred, truth;
  for (const auto& w : windows) {
    auto p = net.predict_rooms(w);
    pred.insert(pred.end(), p.begin(), p.end());
    for (Room r : w.labels) truth.push_back(static_cast<int>(r));
  }
  return weighted_metrics(pred, truth);
}

TrainResult train_model(const std::vector<SensorWindow>& train,
                        const std::vector<SensorWindow>& val,
                        MdcsaConfig net_config, const TrainConfig& config) {
  config.validate();
  if (train.empty() || val.empty()) {
    throw std::invalid_argument("training and validation splits must be non-empty");
  }
  net_config.d = config.d;
  net_config.dropout = config.dropout;
  net_config.validate();

  MdcsaNet net(net_config);
  SeedStream seeds(config.seed);
  net.init_params(seeds.derive("init"));

  OptimConfig oc;
  oc.lr = config.lr;
  Optimizer opt(net.params(), oc);
  auto dropout_rng = seeds.engine("dropout");

  TrainResult result{net, {}, 0.0, 0, 0};
  double best = -1.0;
  int stale_evals = 0;
  int step = 0;
  bool stop = false;

  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = seeds.engine("batch", static_cast<std::size_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t off = 0; off < order.size() && !stop;
         off += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(), off + static_cast<std::size_t>(config.batch_size));
      net.params().zero_grads();
      double batch_loss = 0.0;
      for (std::size_t i = off; i < end; ++i) {
        const SensorWindow& w = train[order[i]];
        Tape tape;
        auto fwd = net.forward(tape, w, true, &dropout_rng);
        auto nll = crf_nll_op(tape, fwd.emissions, gold_labels(w),
                              fwd.leaves.at("crf.trans"), fwd.leaves.at("crf.start"));
        auto bce = ad::bce_with_logits(tape, fwd.hallway_logits,
                                       hallway_targets(w, net_config.referenced_room));
        auto loss = ad::add(tape, nll, bce);
        tape.backward(loss);
        net.accumulate_grads(tape, fwd);
        batch_loss += tape.value(loss)(0, 0);
      }
      double n = static_cast<double>(end - off);
      batch_loss /= n;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("training diverged at step " + std::to_string(step) +
                                 " (non-finite loss)");
      }
      for (const auto& name : net.params().names()) {
        Matrix& g = net.params().grad(name);
        for (double& x : g.a) x /= n;
      }
      opt.step();
      if (!net.params().all_finite()) {
        throw std::runtime_error("training diverged at step " + std::to_string(step) +
                                 " (non-finite parameters)");
      }
      result.loss_trace.push_back(batch_loss);
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) stop = true;
    }

    result.epochs_run = epoch + 1;
    WeightedMetrics wm = evaluate_windows(net, val);
    if (wm.f1 > best + 1e-12) {
      best = wm.f1;
      result.net = net;
      stale_evals = 0;
    } else if (++stale_evals >= config.patience) {
      stop = true;
    }
  }

  result.best_val_f1 = std::max(best, 0.0);
  result.steps = step;
  if (best < 0.0) result.net = net;
  return result;
}

std::size_t grid_search(const std::vector<TrainConfig>& grid,
                        const std::vector<std::pair<std::vector<SensorWindow>,
                                                    std::vector<SensorWindow>>>& splits,
                        MdcsaConfig net_config) {
  if (grid.empty() || splits.empty()) {
    throw std::invalid_argument("grid and splits must be non-empty");
  }
  std::size_t best_idx = 0;
  double best_f1 = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (const auto& [train, val] : splits) {
      sum += train_model(train, val, net_config, grid[i]).best_val_f1;
    }
    double mean_f1 = sum / static_cast<double>(splits.size());
    if (mean_f1 > best_f1 + 1e-12) {
      best_f1 = mean_f1;
      best_idx = i;
    }
  }
  return best_idx;
}

std::vector<double> flatten_window(const SensorWindow& window) {
  std::vector<double> out;
  out.reserve(window.rssi.size() + window.accel.size());
  out.insert(out.end(), window.rssi.begin(), window.rssi.end());
  out.insert(out.end(), window.accel.begin(), window.accel.end());
  return out;
}

int window_mode_label(const SensorWindow& window) {
  std::vector<int> counts(static_cast<std::size_t>(kNumRooms), 0);
  for (Room r : window.labels) counts[static_cast<std::size_t>(r)]++;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

RandomForest rf_fit(const std::vector<SensorWindow>& windows,
                    const ForestConfig& config, std::uint64_t seed) {
  if (windows.empty()) throw std::invalid_argument("cannot fit a forest on no windows");
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  X.reserve(windows.size());
  y.reserve(windows.size());
  for (const auto& w : windows) {
    X.push_back(flatten_window(w));
    y.push_back(window_mode_label(w));
  }
  RandomForest forest(config);
  forest.fit(X, y, seed);
  return forest;
}

std::vector<int> rf_predict(const RandomForest& forest, const SensorWindow& window) {
  int label = forest.predict(flatten_window(window));
  return std::vector<int>(window.labels.size(), label);
}

namespace {

const ParticipantData& participant_by_id(const std::vector<ParticipantData>& cohort,
                                         const std::string& id) {
  for (const auto& p : cohort) {
    if (p.id == id) return p;
  }
  throw std::invalid_argument("unknown participant " + id);
}

}  // namespace

FoldReport run_fold(const std::vector<ParticipantData>& cohort, const ProtocolRun& run,
                    const Fold& fold, std::uint64_t fold_seed) {
  std::vector<SensorWindow> train_raw;
  for (const auto& id : fold.train_participants) {
    const auto& p = participant_by_id(cohort, id);
    std::vector<SensorWindow> w = p.windows;
    if (fold.train_window_budget > 0 &&
        static_cast<int>(w.size()) > fold.train_window_budget) {
      w.resize(static_cast<std::size_t>(fold.train_window_budget));
    }
    train_raw.insert(train_raw.end(), w.begin(), w.end());
  }
  train_raw = cap_windows(std::move(train_raw), run.max_train_windows);
  if (train_raw.empty()) throw std::invalid_argument("fold has no training windows");

  FoldReport report;
  report.protocol = protocol_name(run.protocol);
  report.variant = variant_name(run.variant);
  report.fold = fold.id;
  report.train_participant =
      fold.train_participants.size() == 1 ? fold.train_participants.front() : "";

  std::set<int> keep_aps{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool keep_accel = true;
  bool mask = false;
  if (run.variant == Variant::Mdcsa4Aps || run.variant == Variant::Mdcsa4ApsRssi) {
    auto top = select_top_aps(train_raw, 4);
    keep_aps = std::set<int>(top.begin(), top.end());
    mask = true;
  }
  if (run.variant == Variant::MdcsaRssi || run.variant == Variant::Mdcsa4ApsRssi) {
    keep_accel = false;
    mask = true;
  }

  auto prepare = [&](const std::vector<SensorWindow>& src) {
    if (!mask) return src;
    std::vector<SensorWindow> out;
    out.reserve(src.size());
    for (const auto& w : src) out.push_back(mask_channels(w, keep_aps, keep_accel));
    return out;
  };

  std::vector<SensorWindow> train_all = prepare(train_raw);
  std::vector<std::vector<SensorWindow>> test_sets;
  for (const auto& id : fold.test_participants) {
    const auto& p = participant_by_id(cohort, id);
    test_sets.push_back(prepare(cap_windows(p.windows, run.max_test_windows_per_participant)));
  }

  std::vector<int> pred, truth;
  if (run.variant == Variant::Rf) {
    RandomForest forest = rf_fit(train_all, run.forest, fold_seed);
    for (const auto& windows : test_sets) {
      for (const auto& w : windows) {
        auto p = rf_predict(forest, w);
        pred.insert(pred.end(), p.begin(), p.end());
        for (Room r : w.labels) truth.push_back(static_cast<int>(r));
      }
    }
  } else {
    // Chronologically last 10% of the training windows validate early stopping.
    std::size_t n_val = std::max<std::size_t>(1, train_all.size() / 10);
    if (n_val >= train_all.size()) n_val = train_all.size() - 1;
    std::vector<SensorWindow> train_split(train_all.begin(),
                                          train_all.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<SensorWindow> val_split(train_all.end() - static_cast<std::ptrdiff_t>(n_val),
                                        train_all.end());
    if (train_split.empty()) train_split = val_split;

    NormalizationStats stats = fit_normalizer(train_split);
    for (auto& w : train_split) apply_normalizer(stats, w);
    for (auto& w : val_split) apply_normalizer(stats, w);

    MdcsaConfig nc;
    nc.rssi_channels = train_split.front().n_rssi;
    nc.accel_channels = keep_accel ? train_split.front().n_accel : 0;
    TrainConfig tc = run.train;
    tc.seed = fold_seed;
    TrainResult tr = train_model(train_split, val_split, nc, tc);
    if (!run.checkpoint_dir.empty()) {
      std::string stem = run.checkpoint_dir + "/" + report.protocol + "-" +
                         report.variant + "-fold" + std::to_string(fold.id);
      tr.net.save_checkpoint(stem + ".ckpt");
      save_normalizer(stats, stem + ".norm");
    }

    for (const auto& windows : test_sets) {
      for (auto w : windows) {
        apply_normalizer(stats, w);
        auto p = tr.net.predict_rooms(w);
        pred.insert(pred.end(), p.begin(), p.end());
        for (Room r : w.labels) truth.push_back(static_cast<int>(r));
      }
    }
  }

  if (pred.empty()) throw std::invalid_argument("fold has no test windows");
  WeightedMetrics wm = weighted_metrics(pred, truth);
  report.precision = wm.precision;
  report.f1 = wm.f1;
  return report;
}


ProtocolResult run_protocol(const std::vector<ParticipantData>& cohort,
                            const ProtocolRun& run) {
  std::vector<Fold> folds = make_folds(run.protocol, cohort);
  SeedStream seeds(run.seed);
  std::vector<std::uint64_t> fold_seeds;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    fold_seeds.push_back(seeds.derive("fold", i));
  }

  ProtocolResult result;
  result.folds.resize(folds.size());
  int jobs = std::max(1, run.jobs);
  if (jobs == 1 || folds.size() == 1) {
    for (std::size_t i = 0; i < folds.size(); ++i) {
      result.folds[i] = run_fold(cohort, run, folds[i], fold_seeds[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= folds.size()) return;
        try {
          result.folds[i] = run_fold(cohort, run, folds[i], fold_seeds[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<int>(jobs, static_cast<int>(folds.size())); ++j) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<double> precisions, f1s;
  for (const auto& r : result.folds) {
    precisions.push_back(r.precision);
    f1s.push_back(r.f1);
  }
  result.mean_precision = mean(precisions);
  result.sd_precision = stddev(precisions);
  result.mean_f1 = mean(f1s);
  result.sd_f1 = stddev(f1s);
  return result;
}

void save_fold_reports(const std::vector<FoldReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# mdcsa-folds v1\n";
  out << "protocol,variant,fold,train_participant,precision,f1\n";
  char buf[64];
  for (const auto& r : reports) {
    out << r.protocol << ',' << r.variant << ',' << r.fold << ','
        << r.train_participant << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.precision);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.f1);
    out << buf << '\n';
  }
}

std::vector<FoldReport> load_fold_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# mdcsa-folds v1") {
    throw std::runtime_error(path + ": not a fold-report file");
  }
  std::getline(in, line);  // column header
  std::vector<FoldReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    FoldReport r;
    std::getline(ss, r.protocol, ',');
    std::getline(ss, r.variant, ',');
    std::getline(ss, field, ',');
    r.fold = std::stoi(field);
    std::getline(ss, r.train_participant, ',');
    std::getline(ss, field, ',');
    r.precision = std::stod(field);
    std::getline(ss, field, ',');
    r.f1 = std::stod(field);
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace mdcsa
