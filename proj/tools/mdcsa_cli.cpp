#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mdcsa/gaitfeat.hpp"
#include "mdcsa/harness.hpp"
#include "mdcsa/manifest.hpp"
#include "mdcsa/medstate.hpp"
#include "mdcsa/metrics.hpp"
#include "mdcsa/pipeline.hpp"
#include "mdcsa/simhome.hpp"
#include "mdcsa/stats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mdcsa;

namespace {

// ---------------------------------------------------------------------------
// Config files: "key = value" lines, # comments, flat namespace.
// ---------------------------------------------------------------------------

using ConfigMap = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

ConfigMap read_config(const std::string& path) {
  ConfigMap cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    cfg[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

double cfg_num(const ConfigMap& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : std::stod(it->second);
}

int cfg_int(const ConfigMap& cfg, const std::string& key, int fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : std::stoi(it->second);
}

bool cfg_bool(const ConfigMap& cfg, const std::string& key, bool fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return it->second == "1" || it->second == "true" || it->second == "yes";
}

std::string default_out() {
  const char* env = std::getenv("MDCSA_OUT");
  return env && *env ? env : ".";
}

SimConfig sim_config_from(const ConfigMap& cfg) {
  SimConfig sc;
  sc.n_pairs = cfg_int(cfg, "pairs", sc.n_pairs);
  sc.days = cfg_int(cfg, "days", sc.days);
  sc.day_hours = cfg_num(cfg, "day_hours", sc.day_hours);
  sc.coverage_min_per_day = cfg_num(cfg, "coverage_min_per_day", sc.coverage_min_per_day);
  sc.off_speed_factor = cfg_num(cfg, "off_speed_factor", sc.off_speed_factor);
  sc.accel_noise = cfg_num(cfg, "accel_noise", sc.accel_noise);
  sc.kitchen_burst_amp = cfg_num(cfg, "kitchen_burst_amp", sc.kitchen_burst_amp);
  sc.walk_osc_hz = cfg_num(cfg, "walk_osc_hz", sc.walk_osc_hz);
  sc.tremor_off_boost = cfg_num(cfg, "tremor_off_boost", sc.tremor_off_boost);
  sc.radio.p0_dbm = cfg_num(cfg, "radio_p0_dbm", sc.radio.p0_dbm);
  sc.radio.exponent = cfg_num(cfg, "radio_exponent", sc.radio.exponent);
  sc.radio.wall_db = cfg_num(cfg, "radio_wall_db", sc.radio.wall_db);
  sc.radio.shadowing_db = cfg_num(cfg, "radio_shadowing_db", sc.radio.shadowing_db);
  sc.radio.floor_dbm = cfg_num(cfg, "radio_floor_dbm", sc.radio.floor_dbm);
  return sc;
}

TrainConfig train_config_from(const ConfigMap& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.d = cfg_int(cfg, "d", 64);
  tc.epochs = cfg_int(cfg, "epochs", 50);
  tc.lr = cfg_num(cfg, "lr", 0.01);
  tc.dropout = cfg_num(cfg, "dropout", tc.dropout);
  tc.batch_size = cfg_int(cfg, "batch_size", tc.batch_size);
  tc.patience = cfg_int(cfg, "patience", tc.patience);
  tc.max_steps = cfg_int(cfg, "max_steps", tc.max_steps);
  tc.seed = seed;
  return tc;
}

ForestConfig forest_config_from(const ConfigMap& cfg) {
  ForestConfig fc;
  fc.n_trees = cfg_int(cfg, "n_trees", fc.n_trees);
  fc.min_leaf = cfg_int(cfg, "min_leaf", fc.min_leaf);
  fc.warm_start = cfg_bool(cfg, "warm_start", fc.warm_start);
  fc.mtry = cfg_int(cfg, "mtry", fc.mtry);
  return fc;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_run_manifest(const std::string& command, const std::string& config_path,
                        std::uint64_t seed, const std::vector<std::string>& input_files,
                        const std::vector<std::string>& input_manifests,
                        const std::vector<std::string>& outputs, double duration_s,
                        const std::string& path) {
  RunManifest m;
  m.command = command;
  m.config_path = config_path;
  m.seed = seed;
  for (const auto& f : input_files) {
    if (fs::exists(f)) m.inputs[f] = file_content_hash(f);
  }
  m.input_manifests = input_manifests;
  m.outputs = outputs;
  m.duration_s = duration_s;
  save_manifest(m, path);
}

std::vector<std::string> sibling_manifests(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 14 && name.substr(name.size() - 14) == ".manifest.json") {
      out.push_back(e.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Shared loading
// ---------------------------------------------------------------------------

std::vector<ParticipantData> load_participants(const std::string& windows_dir) {
  std::ifstream meta_in(fs::path(windows_dir) / "meta.json");
  if (!meta_in) {
    throw std::runtime_error("missing " + windows_dir +
                             "/meta.json (run the preprocess command first)");
  }
  json meta = json::parse(meta_in);
  if (meta.value("format", "") != "mdcsa-windows v1") {
    throw std::runtime_error(windows_dir + "/meta.json: unexpected format");
  }
  std::vector<ParticipantData> cohort;
  for (const auto& jp : meta.at("participants")) {
    ParticipantData p;
    p.id = jp.at("id");
    p.group = jp.at("group") == "PD" ? Group::PD : Group::HC;
    p.windows = load_windows((fs::path(windows_dir) / (p.id + ".windows")).string());
    cohort.push_back(std::move(p));
  }
  return cohort;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out) {
  Timer timer;
  ConfigMap cfg = read_config(config_path);
  SimConfig sc = sim_config_from(cfg);
  Cohort cohort = generate_cohort(sc, seed);
  fs::create_directories(out);
  save_cohort(cohort, out);

  std::size_t rssi = 0, accel = 0;
  for (const auto& t : cohort.traces) {
    rssi += t.rssi_packets.size();
    accel += t.accel_samples.size();
  }
  std::cout << "simulated " << cohort.profiles.size() << " participants over "
            << sc.days << " days (" << rssi << " rssi packets, " << accel
            << " accel samples)\n";
  write_run_manifest("simulate", config_path, seed, config_path.empty()
                         ? std::vector<std::string>{}
                         : std::vector<std::string>{config_path},
                     {}, {out + "/manifest.json"}, timer.seconds(),
                     out + "/simulate.manifest.json");
  return 0;
}

int cmd_preprocess(const std::string& data, const std::string& out) {
  Timer timer;
  Cohort cohort = load_cohort(data);
  fs::create_directories(out);

  json meta;
  meta["format"] = "mdcsa-windows v1";
  std::vector<std::string> outputs;
  std::size_t total = 0;
  for (const auto& trace : cohort.traces) {
    std::vector<SensorWindow> windows = windows_from_trace(trace);
    std::string path = (fs::path(out) / (trace.participant + ".windows")).string();
    save_windows(windows, path);
    outputs.push_back(path);
    total += windows.size();
    const ParticipantProfile* prof = cohort.profile(trace.participant);
    json jp;
    jp["id"] = trace.participant;
    jp["group"] = prof && prof->group == Group::PD ? "PD" : "HC";
    jp["windows"] = windows.size();
    meta["participants"].push_back(jp);
  }
  std::ofstream((fs::path(out) / "meta.json").string()) << meta.dump(2) << '\n';
  std::cout << "preprocessed " << cohort.traces.size() << " participants, "
            << total << " windows\n";
  write_run_manifest("preprocess", "", cohort.seed, {data + "/manifest.json"},
                     sibling_manifests(data), outputs, timer.seconds(),
                     out + "/preprocess.manifest.json");
  return 0;
}

int cmd_train(const std::string& config_path, std::uint64_t seed, const std::string& data,
              const std::string& out, const std::string& protocol_str,
              const std::string& variant_str, int jobs) {
  Timer timer;
  auto protocol = protocol_from_name(protocol_str);
  auto variant = variant_from_name(variant_str);
  if (!protocol || !variant) {
    throw CLI::ValidationError("unknown protocol or variant");
  }
  ConfigMap cfg = read_config(config_path);
  std::vector<ParticipantData> cohort = load_participants(data);

  ProtocolRun run;
  run.protocol = *protocol;
  run.variant = *variant;
  run.train = train_config_from(cfg, seed);
  run.forest = forest_config_from(cfg);
  run.max_train_windows = cfg_int(cfg, "max_train_windows", 0);
  run.max_test_windows_per_participant = cfg_int(cfg, "max_test_windows", 0);
  run.jobs = jobs;
  run.seed = seed;

  fs::create_directories(out);
  fs::create_directories(fs::path(out) / "checkpoints");
  fs::create_directories(fs::path(out) / "folds");
  run.checkpoint_dir = (fs::path(out) / "checkpoints").string();

  std::vector<Fold> folds = make_folds(run.protocol, cohort);
  SeedStream seeds(seed);
  std::vector<FoldReport> reports(folds.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    std::string fold_file = (fs::path(out) / "folds" /
                             (protocol_str + "-" + variant_str + "-fold" +
                              std::to_string(folds[i].id) + ".csv")).string();
    if (fs::exists(fold_file)) {
      auto prior = load_fold_reports(fold_file);
      if (prior.size() == 1) {
        reports[i] = prior.front();
        std::cout << "fold " << folds[i].id << ": reusing " << fold_file << '\n';
        continue;
      }
    }
    pending.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      std::size_t i = pending[k];
      try {
        FoldReport r = run_fold(cohort, run, folds[i],
                                seeds.derive("fold", static_cast<std::uint64_t>(i)));
        std::string fold_file = (fs::path(out) / "folds" /
                                 (protocol_str + "-" + variant_str + "-fold" +
                                  std::to_string(folds[i].id) + ".csv")).string();
        save_fold_reports({r}, fold_file);
        std::lock_guard<std::mutex> lock(mu);
        reports[i] = r;
        std::cout << "fold " << folds[i].id << ": precision "
                  << r.precision * 100.0 << "  f1 " << r.f1 * 100.0 << '\n';
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(pending.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < n_workers; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::string table = (fs::path(out) / (protocol_str + "-" + variant_str + "-folds.csv")).string();
  save_fold_reports(reports, table);

  std::vector<double> precisions, f1s;
  for (const auto& r : reports) {
    precisions.push_back(r.precision);
    f1s.push_back(r.f1);
  }
  std::printf("%s %s: precision %.2f (%.2f)  f1 %.2f (%.2f) over %zu folds\n",
              protocol_str.c_str(), variant_str.c_str(), mean(precisions) * 100.0,
              stddev(precisions) * 100.0, mean(f1s) * 100.0, stddev(f1s) * 100.0,
              reports.size());
  write_run_manifest("train", config_path, seed, {data + "/meta.json"},
                     sibling_manifests(data), {table}, timer.seconds(),
                     out + "/train-" + protocol_str + "-" + variant_str + ".manifest.json");
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data,
                 const std::string& out) {
  Timer timer;
  MdcsaNet net = MdcsaNet::load_checkpoint(checkpoint);
  std::vector<ParticipantData> cohort = load_participants(data);

  std::string norm_path = checkpoint;
  std::string::size_type dot = norm_path.rfind(".ckpt");
  if (dot != std::string::npos) norm_path = norm_path.substr(0, dot);
  norm_path += ".norm";
  bool has_norm = fs::exists(norm_path);
  NormalizationStats stats;
  if (has_norm) stats = load_normalizer(norm_path);

  fs::create_directories(out);
  std::string table = (fs::path(out) / "evaluate.csv").string();
  std::ofstream csv(table);
  csv << "# mdcsa-eval v1\nparticipant,group,precision,f1\n";
  char buf[64];
  for (const auto& p : cohort) {
    std::vector<int> pred, truth;
    for (auto w : p.windows) {
      if (has_norm) apply_normalizer(stats, w);
      auto y = net.predict_rooms(w);
      pred.insert(pred.end(), y.begin(), y.end());
      for (Room r : w.labels) truth.push_back(static_cast<int>(r));
    }
    if (pred.empty()) continue;
    WeightedMetrics wm = weighted_metrics(pred, truth);
    csv << p.id << ',' << (p.group == Group::PD ? "PD" : "HC") << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", wm.precision);
    csv << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", wm.f1);
    csv << buf << '\n';
    std::printf("%s: precision %.2f  f1 %.2f\n", p.id.c_str(), wm.precision * 100.0,
                wm.f1 * 100.0);
  }
  csv.close();
  write_run_manifest("evaluate", "", 0, {checkpoint, data + "/meta.json"},
                     sibling_manifests(data), {table}, timer.seconds(),
                     out + "/evaluate.manifest.json");
  return 0;
}

int cmd_gait(const std::string& data, const std::string& out) {
  Timer timer;
  Cohort cohort = load_cohort(data);
  fs::create_directories(out);

  std::int64_t end_ms = static_cast<std::int64_t>(cohort.config.days) * kDayMs;
  std::vector<GaitFeatureRow> all_rows;
  std::vector<Transition> pd_transitions, hc_transitions;
  for (const auto& trace : cohort.traces) {
    const ParticipantProfile* prof = cohort.profile(trace.participant);
    const MedicationSchedule* sched = cohort.schedule(trace.participant);
    std::vector<Transition> transitions = transitions_from_rle(trace.truth, end_ms);
    auto& sink = prof && prof->group == Group::PD ? pd_transitions : hc_transitions;
    sink.insert(sink.end(), transitions.begin(), transitions.end());
    auto rows = aggregate_features(transitions, trace.participant, sched, cohort.config.days);
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
  }
  std::string features_path = (fs::path(out) / "gait-features.csv").string();
  save_gait_features(all_rows, features_path);

  std::string table_path = (fs::path(out) / "transition-table.csv").string();
  std::ofstream table(table_path);
  table << "# mdcsa-transitions v1\ngroup,pair,mean_s,sd_s,n\n";
  char buf[64];
  for (const auto& [group, transitions] :
       {std::pair<const char*, const std::vector<Transition>&>{"PD", pd_transitions},
        {"HC", hc_transitions}}) {
    TransitionTable tt = mean_transition_table(transitions);
    for (int p = 0; p < kNumPairs; ++p) {
      table << group << ',' << pair_name(p) << ',';
      if (tt.n[static_cast<std::size_t>(p)] == 0) {
        table << "N/A,N/A,0\n";
        continue;
      }
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%d", tt.mean[static_cast<std::size_t>(p)],
                    tt.sd[static_cast<std::size_t>(p)], tt.n[static_cast<std::size_t>(p)]);
      table << buf << '\n';
    }
  }
  table.close();
  std::cout << "extracted " << pd_transitions.size() + hc_transitions.size()
            << " transitions into " << all_rows.size() << " feature rows\n";
  write_run_manifest("gait", "", cohort.seed, {data + "/manifest.json"},
                     sibling_manifests(data), {features_path, table_path},
                     timer.seconds(), out + "/gait.manifest.json");
  return 0;
}

int cmd_medstate(const std::string& config_path, std::uint64_t seed,
                 const std::string& features_path, const std::string& cohort_dir,
                 const std::string& source, const std::string& out) {
  Timer timer;
  ConfigMap cfg = read_config(config_path);
  ForestConfig fc = forest_config_from(cfg);

  Cohort cohort = load_cohort(cohort_dir);
  std::vector<MedSample> samples;
  if (source == "gait") {
    if (features_path.empty()) {
      throw CLI::ValidationError("--features is required for the gait source");
    }
    auto rows = load_gait_features(features_path);
    std::vector<GaitFeatureRow> pd_rows;
    for (auto& r : rows) {
      const ParticipantProfile* prof = cohort.profile(r.participant);
      if (prof && prof->group == Group::PD) pd_rows.push_back(r);
    }
    samples = samples_from_gait(pd_rows);
  } else {
    bool include_updrs = source == "demographic";
    for (const auto& prof : cohort.profiles) {
      if (prof.group != Group::PD) continue;
      const MedicationSchedule* sched = cohort.schedule(prof.id);
      if (!sched) continue;
      auto s = samples_from_demographics(prof, *sched, cohort.config.days, include_updrs);
      samples.insert(samples.end(), s.begin(), s.end());
    }
  }

  MedResult result = run_med_protocol(samples, fc, seed);
  fs::create_directories(out);
  std::string table = (fs::path(out) / ("medstate-" + source + ".csv")).string();
  std::ofstream csv(table);
  csv << "# mdcsa-medstate v1\nparticipant,f1,auroc\n";
  char buf[64];
  for (const auto& f : result.folds) {
    csv << f.participant << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", f.f1);
    csv << buf << ',';
    if (std::isfinite(f.auroc)) {
      std::snprintf(buf, sizeof(buf), "%.17g", f.auroc);
      csv << buf;
    } else {
      csv << "N/A";
    }
    csv << '\n';
  }
  csv.close();
  std::printf("medstate (%s): f1 %.2f (%.2f)  auroc %.2f (%.2f) over %zu folds\n",
              source.c_str(), result.mean_f1 * 100.0, result.sd_f1 * 100.0,
              result.mean_auroc * 100.0, result.sd_auroc * 100.0, result.folds.size());
  std::vector<std::string> inputs{cohort_dir + "/manifest.json"};
  if (!features_path.empty()) inputs.push_back(features_path);
  write_run_manifest("medstate", config_path, seed, inputs,
                     sibling_manifests(cohort_dir), {table}, timer.seconds(),
                     out + "/medstate-" + source + ".manifest.json");
  return 0;
}

struct VariantFolds {
  std::string variant;
  std::vector<FoldReport> folds;
};

std::vector<VariantFolds> collect_fold_tables(const std::string& dir) {
  std::vector<VariantFolds> tables;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 10 && name.substr(name.size() - 10) == "-folds.csv") {
      files.push_back(e.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto reports = load_fold_reports(f);
    if (reports.empty()) continue;
    tables.push_back({reports.front().variant, std::move(reports)});
  }
  return tables;
}

int cmd_stats(const std::string& data, const std::string& out) {
  Timer timer;
  std::vector<VariantFolds> tables = collect_fold_tables(data);
  if (tables.empty()) throw std::runtime_error("no fold-report tables in " + data);
  fs::create_directories(out);
  std::string report_path = (fs::path(out) / "stats.txt").string();
  std::ofstream report(report_path);
  report << "# mdcsa-stats v1\n";

  if (tables.size() < 2) {
    report << "single variant " << tables.front().variant
           << ": comparison statistics skipped\n";
    std::cout << "single variant: stats section skipped\n";
    write_run_manifest("stats", "", 0, {}, sibling_manifests(data), {report_path},
                       timer.seconds(), out + "/stats.manifest.json");
    return 0;
  }

  std::size_t n_folds = tables.front().folds.size();
  for (const auto& t : tables) {
    if (t.folds.size() != n_folds) {
      throw std::runtime_error("fold count mismatch: " + tables.front().variant + " has " +
                               std::to_string(n_folds) + ", " + t.variant + " has " +
                               std::to_string(t.folds.size()));
    }
  }
  if (n_folds < 2) {
    report << "single fold per variant: comparison statistics need a multi-fold protocol\n";
    std::cout << "single fold per variant: stats section skipped\n";
    write_run_manifest("stats", "", 0, {}, sibling_manifests(data), {report_path},
                       timer.seconds(), out + "/stats.manifest.json");
    return 0;
  }

  std::vector<std::vector<double>> matrix(n_folds, std::vector<double>(tables.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < tables.size(); ++j) {
    names.push_back(tables[j].variant);
    for (std::size_t i = 0; i < n_folds; ++i) {
      matrix[i][j] = tables[j].folds[i].f1;
    }
  }

  char buf[128];
  FriedmanResult fr = friedman_test(matrix);
  std::snprintf(buf, sizeof(buf), "friedman chi2 = %.6g  p = %.6g  %s\n", fr.statistic,
                fr.p, fr.p < 0.05 ? "reject" : "keep");
  report << buf;

  std::vector<std::pair<std::size_t, std::size_t>> model_pairs;
  std::vector<double> pvals;
  for (std::size_t a = 0; a < tables.size(); ++a) {
    for (std::size_t b = a + 1; b < tables.size(); ++b) {
      std::vector<std::pair<double, double>> paired;
      for (std::size_t i = 0; i < n_folds; ++i) {
        paired.emplace_back(matrix[i][a], matrix[i][b]);
      }
      auto w = wilcoxon_signed_rank(paired, Alternative::TwoSided);
      model_pairs.emplace_back(a, b);
      pvals.push_back(w ? w->p : 1.0);
    }
  }
  auto decisions = holm_correction(pvals, 0.05);
  std::vector<std::vector<bool>> significant(tables.size(),
                                             std::vector<bool>(tables.size(), false));
  for (std::size_t k = 0; k < model_pairs.size(); ++k) {
    auto [a, b] = model_pairs[k];
    std::snprintf(buf, sizeof(buf), "wilcoxon %s vs %s: p = %.6g  holm-adjusted %.6g  %s\n",
                  names[a].c_str(), names[b].c_str(), decisions[k].p,
                  decisions[k].adjusted_p, decisions[k].reject ? "reject" : "keep");
    report << buf;
    significant[a][b] = significant[b][a] = decisions[k].reject;
  }

  RankDiagram diagram = critical_difference_ranks(matrix, significant);
  report << render_rank_diagram(diagram, names);
  report.close();

  std::string plot_path = (fs::path(out) / "cd-plot.csv").string();
  std::ofstream plot(plot_path);
  plot << "# mdcsa-cd v1\nmodel,average_rank,clique\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    int clique_id = -1;
    for (std::size_t c = 0; c < diagram.cliques.size(); ++c) {
      for (int member : diagram.cliques[c]) {
        if (member == static_cast<int>(j)) {
          clique_id = static_cast<int>(c);
          break;
        }
      }
      if (clique_id >= 0) break;
    }
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%d\n", names[j].c_str(),
                  diagram.average_rank[j], clique_id);
    plot << buf;
  }
  plot.close();

  std::cout << "stats over " << tables.size() << " variants, " << n_folds
            << " folds: friedman p = " << fr.p << '\n';
  write_run_manifest("stats", "", 0, {}, sibling_manifests(data),
                     {report_path, plot_path}, timer.seconds(),
                     out + "/stats.manifest.json");
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out) {
  Timer timer;
  std::vector<VariantFolds> tables;
  std::vector<std::string> extra_sections;
  for (const auto& dir : run_dirs) {
    auto t = collect_fold_tables(dir);
    tables.insert(tables.end(), t.begin(), t.end());
    for (const char* name : {"transition-table.csv", "medstate-gait.csv",
                             "medstate-demographic.csv", "medstate-demographic-noupdrs.csv"}) {
      fs::path p = fs::path(dir) / name;
      if (fs::exists(p)) extra_sections.push_back(p.string());
    }
  }
  if (tables.empty()) throw std::runtime_error("no fold-report tables under the given run dirs");

  fs::create_directories(out);
  std::string report_path = (fs::path(out) / "report.txt").string();
  std::ofstream report(report_path);
  report << "# mdcsa-report v1\n\nRoom-level localisation (mean (sd) x100 across folds)\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %-18s %-16s %-16s %s\n", "protocol", "variant",
                "precision", "f1", "folds");
  report << buf;
  for (const auto& t : tables) {
    std::vector<double> precisions, f1s;
    for (const auto& r : t.folds) {
      precisions.push_back(r.precision);
      f1s.push_back(r.f1);
    }
    std::snprintf(buf, sizeof(buf), "%-10s %-18s %6.2f (%5.2f)   %6.2f (%5.2f)   %zu\n",
                  t.folds.front().protocol.c_str(), t.variant.c_str(),
                  mean(precisions) * 100.0, stddev(precisions) * 100.0, mean(f1s) * 100.0,
                  stddev(f1s) * 100.0, t.folds.size());
    report << buf;
  }

  for (const auto& path : extra_sections) {
    report << "\n[" << fs::path(path).filename().string() << "]\n";
    std::ifstream in(path);
    report << in.rdbuf();
  }

  // Cross-variant statistics need at least two tables with matching folds.
  std::map<std::string, std::vector<VariantFolds>> by_protocol;
  for (const auto& t : tables) by_protocol[t.folds.front().protocol].push_back(t);
  report << '\n';
  for (const auto& [protocol, group] : by_protocol) {
    if (group.size() < 2) {
      report << protocol << ": single variant, statistics skipped\n";
      continue;
    }
    std::size_t n_folds = group.front().folds.size();
    bool mismatched = false;
    for (const auto& t : group) mismatched |= t.folds.size() != n_folds;
    if (mismatched) {
      report << protocol << ": fold count mismatch across variants, statistics skipped\n";
      continue;
    }
    if (n_folds < 2) {
      report << protocol << ": single fold, statistics skipped\n";
      continue;
    }
    std::vector<std::vector<double>> matrix(n_folds, std::vector<double>(group.size()));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < group.size(); ++j) {
      names.push_back(group[j].variant);
      for (std::size_t i = 0; i < n_folds; ++i) matrix[i][j] = group[j].folds[i].f1;
    }
    FriedmanResult fr = friedman_test(matrix);
    std::snprintf(buf, sizeof(buf), "%s: friedman chi2 = %.6g  p = %.6g\n",
                  protocol.c_str(), fr.statistic, fr.p);
    report << buf;
  }
  report.close();

  std::cout << "report written to " << report_path << '\n';
  std::vector<std::string> manifests;
  for (const auto& dir : run_dirs) {
    auto m = sibling_manifests(dir);
    manifests.insert(manifests.end(), m.begin(), m.end());
  }
  write_run_manifest("report", "", 0, {}, manifests, {report_path}, timer.seconds(),
                     out + "/report.manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal indoor-localisation toolkit"};
  app.require_subcommand(1);

  std::string config, out = default_out(), data, checkpoint, features, cohort_dir;
  std::string protocol = "ALL-HC", variant = "mdcsa", source = "gait";
  std::uint64_t seed = 42;
  int jobs = 1;
  std::vector<std::string> run_dirs;

  auto add_common = [&](CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--config", config, "key = value configuration file");
    cmd->add_option("--out", out, "output directory (default $MDCSA_OUT or .)");
    if (with_seed) cmd->add_option("--seed", seed, "root random seed");
  };

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic smart-home cohort");
  add_common(sim);

  auto* pre = app.add_subcommand("preprocess", "Build sensor windows from a cohort");
  add_common(pre, false);
  pre->add_option("--data", data, "cohort directory")->required();

  auto* train = app.add_subcommand("train", "Train a model under a protocol");
  add_common(train);
  train->add_option("--data", data, "preprocessed windows directory")->required();
  train->add_option("--protocol", protocol, "ALL-HC, LOO-HC, LOO-PD, 4m-HC or 4m-PD")
      ->check(CLI::IsMember({"ALL-HC", "LOO-HC", "LOO-PD", "4m-HC", "4m-PD"}));
  train->add_option("--variant", variant, "model variant")
      ->check(CLI::IsMember({"mdcsa", "mdcsa-4aps", "mdcsa-rssi", "mdcsa-4aps-rssi", "rf"}));
  train->add_option("--jobs", jobs, "parallel folds");

  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on windows");
  add_common(eval, false);
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval->add_option("--data", data, "preprocessed windows directory")->required();

  auto* gait = app.add_subcommand("gait", "Extract gait features from room truth");
  add_common(gait, false);
  gait->add_option("--data", data, "cohort directory")->required();

  auto* med = app.add_subcommand("medstate", "ON/OFF medication-state classification");
  add_common(med);
  med->add_option("--features", features, "gait feature file");
  med->add_option("--data", cohort_dir, "cohort directory")->required();
  med->add_option("--source", source, "feature source")
      ->check(CLI::IsMember({"gait", "demographic", "demographic-noupdrs"}));

  auto* st = app.add_subcommand("stats", "Compare variants from fold reports");
  add_common(st, false);
  st->add_option("--data", data, "directory holding *-folds.csv tables")->required();

  auto* rep = app.add_subcommand("report", "Combined report over run directories");
  add_common(rep, false);
  rep->add_option("--data", run_dirs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config, seed, out);
    if (pre->parsed()) return cmd_preprocess(data, out);
    if (train->parsed()) return cmd_train(config, seed, data, out, protocol, variant, jobs);
    if (eval->parsed()) return cmd_evaluate(checkpoint, data, out);
    if (gait->parsed()) return cmd_gait(data, out);
    if (med->parsed()) return cmd_medstate(config, seed, features, cohort_dir, source, out);
    if (st->parsed()) return cmd_stats(data, out);
    if (rep->parsed()) return cmd_report(run_dirs, out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
