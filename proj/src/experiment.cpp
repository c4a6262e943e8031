#include "emgdecon/experiment.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "emgdecon/baselines.hpp"
#include "emgdecon/error.hpp"
#include "emgdecon/parallel.hpp"
#include "emgdecon/purity.hpp"
#include "emgdecon/random.hpp"
#include "emgdecon/signal_io.hpp"

namespace emgdecon {

namespace {

nlohmann::json annotated(const nlohmann::json& v, const char* source) {
  return {{"value", v}, {"source", source}};
}

// Reads `key` from an object, accepting {"value": v, ...} or a bare v.
template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  try {
    field = (v.is_object() && v.contains("value")) ? v.at("value").get<T>() : v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace

nlohmann::json config_to_json(const ExperimentConfig& c) {
  constexpr const char* P = "published";
  constexpr const char* R = "reconstruction";
  const auto& f = c.filters;
  const auto& t = c.train;
  const auto& k = c.classifier;
  const auto& s = c.selection;
  const auto& fe = c.features;
  return {
      {"seed", annotated(c.seed, R)},
      {"levels", annotated(c.levels, P)},
      {"alpha_mode", annotated(to_string(c.alpha_mode), R)},
      {"reference_duration_s", annotated(c.reference_duration_s, R)},
      {"jobs", c.jobs},
      {"paths",
       {{"data_dir", c.paths.data_dir},
        {"model_dir", c.paths.model_dir},
        {"checkpoint_dir", c.paths.checkpoint_dir},
        {"report_dir", c.paths.report_dir}}},
      {"filters",
       {{"order", annotated(f.order, R)},
        {"ripple_db", annotated(f.ripple_db, R)},
        {"atten_db", annotated(f.atten_db, P)},
        {"hpf_cutoff_hz", annotated(f.hpf_cutoff_hz, R)},
        {"lpf_cutoff_hz", annotated(f.lpf_cutoff_hz, R)},
        {"notch_centers_hz", annotated(f.notch_centers_hz, P)},
        {"notch_stop_halfwidth_hz", annotated(f.notch_stop_halfwidth_hz, R)}}},
      {"features",
       {{"welch_window", annotated(fe.welch.window_len, R)},
        {"welch_overlap", annotated(fe.welch.overlap, R)},
        {"pli_halfwidth_hz", annotated(fe.pli_halfwidth, R)},
        {"pli_leakage_bins", annotated(fe.pli_leakage_bins, R)},
        {"clamp_db", annotated(fe.clamp_db, R)}}},
      {"classifier",
       {{"svm_c", annotated(k.svm_c, R)},
        {"svm_gamma", annotated(k.svm_gamma, R)},
        {"nn_hidden", annotated(k.nn_hidden, R)},
        {"nn_lr", annotated(k.nn_lr, R)},
        {"nn_epochs", annotated(k.nn_epochs, R)},
        {"nn_batch", annotated(k.nn_batch, R)},
        {"tree_max_depth", annotated(k.tree_max_depth, R)},
        {"logreg_lambda", annotated(k.logreg_lambda, R)},
        {"knn_k", annotated(k.knn_k, R)},
        {"lda_ridge", annotated(k.lda_ridge, R)}}},
      {"selection",
       {{"val_fraction", annotated(s.val_fraction, R)},
        {"lime_instances", annotated(s.lime_instances, R)},
        {"subset_sizes", annotated(s.subset_sizes, R)},
        {"lime_samples", annotated(s.lime.samples, R)},
        {"lime_kernel_width_factor", annotated(s.lime.kernel_width_factor, R)},
        {"lime_ridge", annotated(s.lime.ridge, R)}}},
      {"train",
       {{"episodes", annotated(t.episodes, P)},
        {"max_steps", annotated(t.max_steps, P)},
        {"lr", annotated(t.lr, P)},
        {"adam_beta1", annotated(t.adam_beta1, P)},
        {"adam_beta2", annotated(t.adam_beta2, R)},
        {"grad_clip", annotated(t.grad_clip, R)},
        {"gamma", annotated(t.gamma, R)},
        {"eps_start", annotated(t.eps_start, P)},
        {"eps_end", annotated(t.eps_end, P)},
        {"eps_decay", annotated(t.eps_decay, P)},
        {"batch", annotated(t.batch, R)},
        {"target_sync", annotated(t.target_sync, R)},
        {"replay_capacity", annotated(t.replay_capacity, R)},
        {"hidden", annotated(t.hidden, R)},
        {"seed", annotated(t.seed, R)}}},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw PreconditionError("config: top level must be an object");
  ExperimentConfig c;
  read(j, "seed", c.seed);
  read(j, "levels", c.levels);
  std::string mode = to_string(c.alpha_mode);
  read(j, "alpha_mode", mode);
  c.alpha_mode = alpha_mode_from_string(mode);
  read(j, "reference_duration_s", c.reference_duration_s);
  read(j, "jobs", c.jobs);
  const auto& p = section(j, "paths");
  read(p, "data_dir", c.paths.data_dir);
  read(p, "model_dir", c.paths.model_dir);
  read(p, "checkpoint_dir", c.paths.checkpoint_dir);
  read(p, "report_dir", c.paths.report_dir);
  const auto& f = section(j, "filters");
  read(f, "order", c.filters.order);
  read(f, "ripple_db", c.filters.ripple_db);
  read(f, "atten_db", c.filters.atten_db);
  read(f, "hpf_cutoff_hz", c.filters.hpf_cutoff_hz);
  read(f, "lpf_cutoff_hz", c.filters.lpf_cutoff_hz);
  read(f, "notch_centers_hz", c.filters.notch_centers_hz);
  read(f, "notch_stop_halfwidth_hz", c.filters.notch_stop_halfwidth_hz);
  const auto& fe = section(j, "features");
  read(fe, "welch_window", c.features.welch.window_len);
  read(fe, "welch_overlap", c.features.welch.overlap);
  read(fe, "pli_halfwidth_hz", c.features.pli_halfwidth);
  read(fe, "pli_leakage_bins", c.features.pli_leakage_bins);
  read(fe, "clamp_db", c.features.clamp_db);
  const auto& k = section(j, "classifier");
  read(k, "svm_c", c.classifier.svm_c);
  read(k, "svm_gamma", c.classifier.svm_gamma);
  read(k, "nn_hidden", c.classifier.nn_hidden);
  read(k, "nn_lr", c.classifier.nn_lr);
  read(k, "nn_epochs", c.classifier.nn_epochs);
  read(k, "nn_batch", c.classifier.nn_batch);
  read(k, "tree_max_depth", c.classifier.tree_max_depth);
  read(k, "logreg_lambda", c.classifier.logreg_lambda);
  read(k, "knn_k", c.classifier.knn_k);
  read(k, "lda_ridge", c.classifier.lda_ridge);
  c.selection.params = c.classifier;
  const auto& s = section(j, "selection");
  read(s, "val_fraction", c.selection.val_fraction);
  read(s, "lime_instances", c.selection.lime_instances);
  read(s, "subset_sizes", c.selection.subset_sizes);
  read(s, "lime_samples", c.selection.lime.samples);
  read(s, "lime_kernel_width_factor", c.selection.lime.kernel_width_factor);
  read(s, "lime_ridge", c.selection.lime.ridge);
  const auto& t = section(j, "train");
  read(t, "episodes", c.train.episodes);
  read(t, "max_steps", c.train.max_steps);
  read(t, "lr", c.train.lr);
  read(t, "adam_beta1", c.train.adam_beta1);
  read(t, "adam_beta2", c.train.adam_beta2);
  read(t, "grad_clip", c.train.grad_clip);
  read(t, "gamma", c.train.gamma);
  read(t, "eps_start", c.train.eps_start);
  read(t, "eps_end", c.train.eps_end);
  read(t, "eps_decay", c.train.eps_decay);
  read(t, "batch", c.train.batch);
  read(t, "target_sync", c.train.target_sync);
  read(t, "replay_capacity", c.train.replay_capacity);
  read(t, "hidden", c.train.hidden);
  read(t, "seed", c.train.seed);

  if (c.levels.empty()) throw PreconditionError("config: levels must not be empty");
  for (double l : c.levels) {
    // Checked ahead of the level set so the singularity is what gets reported.
    if (c.alpha_mode == AlphaMode::Literal && l == 0.0) {
      throw NumericError("alpha: singular at 0 dB in literal mode");
    }
    level_bits(l);
  }
  if (!(c.reference_duration_s >= 2.0)) {
    throw PreconditionError("config: reference_duration_s must be at least 2 s");
  }
  c.train.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string() + " (run `init` first)");
  try {
    return config_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write config " + path.string());
  os << config_to_json(c).dump(2) << '\n';
}

Workspace::Workspace(std::filesystem::path root, ExperimentConfig cfg)
    : root_(std::move(root)), cfg_(std::move(cfg)), bank_(cfg_.filters) {}

std::filesystem::path Workspace::data_dir(double level_db) const {
  return root_ / cfg_.paths.data_dir / ("level_" + format_level(level_db));
}

std::filesystem::path Workspace::registry_dir() const { return root_ / cfg_.paths.model_dir / "registry"; }

std::filesystem::path Workspace::checkpoint_path(double level_db) const {
  return root_ / cfg_.paths.checkpoint_dir / ("agent_" + format_level(level_db) + ".ckpt");
}

std::filesystem::path Workspace::report_dir() const { return root_ / cfg_.paths.report_dir; }

const SpectralReference& Workspace::reference() const {
  if (!ref_) {
    const auto clean = synth_clean_semg(cfg_.reference_duration_s, derive_seed(cfg_.seed, 7));
    ref_ = make_spectral_reference(clean, cfg_.features);
  }
  return *ref_;
}

namespace {

void require_file(const std::filesystem::path& p, const std::string& hint) {
  if (!std::filesystem::exists(p)) {
    throw PreconditionError("missing " + p.string() + " (" + hint + ")");
  }
}

NoisyDataset load_dataset(const Workspace& ws, double level_db, int id) {
  const auto dir = ws.data_dir(level_db);
  require_file(dir / "manifest.json", "run `gen` for level " + format_level(level_db));
  return read_dataset(dir, id);
}

void write_reward_table(const Workspace& ws, const ModelRegistry& reg) {
  std::filesystem::create_directories(ws.report_dir());
  std::ofstream os(ws.report_dir() / "reward_models.csv", std::ios::trunc);
  if (!os) throw IoError("cannot write reward table");
  os << "code,level,action,classifier,features,accuracy_pct,all_features_accuracy_pct\n";
  for (const auto& [bits, e] : reg.entries()) {
    std::string feats;
    for (auto f : e.features) feats += (feats.empty() ? "" : ";") + std::string(kFeatureNames[f]);
    os << e.code.str() << ',' << format_level(e.code.level_db()) << ','
       << to_string(e.code.action()) << ',' << to_string(e.kind) << ',' << feats << ','
       << format_number(e.accuracy, 2) << ',' << format_number(e.all_features_accuracy, 2) << '\n';
  }
}

}  // namespace

void cmd_init(const std::filesystem::path& config_path, bool force, std::ostream& out) {
  if (std::filesystem::exists(config_path) && !force) {
    throw PreconditionError(config_path.string() + " already exists (use --force to overwrite)");
  }
  save_config(config_path, ExperimentConfig{});
  out << "wrote default config to " << config_path.string() << '\n';
}

void cmd_gen(const Workspace& ws, const std::vector<double>& levels, std::ostream& out) {
  const auto& cfg = ws.config();
  for (double level : levels) {
    ContaminationConfig cc{level, cfg.alpha_mode, cfg.seed};
    if (cfg.alpha_mode == AlphaMode::Literal && level == 0.0) {
      throw NumericError("alpha: singular at 0 dB in literal mode");
    }
    const auto corpus = build_corpus(cc, 3, 3, cfg.jobs);
    write_corpus(ws.data_dir(level), corpus);
    out << "level " << format_level(level) << " dB: wrote " << corpus.size() << " datasets to "
        << ws.data_dir(level).string() << '\n';
  }

  // Purity of the three clean signals (shared by every level).
  const auto seeds = corpus_seeds(cfg.seed);
  const double duration = static_cast<double>(kSequenceLength * kSegmentLength) / kSampleRate;
  std::filesystem::create_directories(ws.root() / cfg.paths.data_dir);
  std::ofstream os(ws.root() / cfg.paths.data_dir / "purity.csv", std::ios::trunc);
  if (!os) throw IoError("cannot write purity report");
  os << "signal,clean_seed,windows,good,percent_good\n";
  out << "purity of clean signals (1 s windows):\n";
  for (std::size_t j = 0; j < seeds.clean.size(); ++j) {
    const auto clean = synth_clean_semg(duration, seeds.clean[j]);
    const auto rep = purity_check(clean, ws.reference(), PurityThresholds{}, cfg.features);
    os << j + 1 << ',' << seeds.clean[j] << ',' << rep.windows.size() << ',' << rep.good_count()
       << ',' << format_number(rep.percent_good, 3) << '\n';
    out << "  clean signal " << j + 1 << ": " << rep.good_count() << "/" << rep.windows.size()
        << " good (" << format_number(rep.percent_good, 1) << "%)"
        << (rep.percent_good >= 90.0 ? "" : "  below the 90% suitability bar") << '\n';
  }
}

void cmd_reward_train(const Workspace& ws, double level_db, std::ostream& out) {
  const auto& cfg = ws.config();
  level_bits(level_db);
  const auto nd1 = load_dataset(ws, level_db, 1);
  const auto examples =
      build_reward_training_set(nd1, level_db, ws.reference(), ws.bank(), cfg.features);
  std::size_t clean = 0;
  for (const auto& e : examples) clean += e.clean ? 1 : 0;
  out << "level " << format_level(level_db) << " dB: " << examples.size() << " examples ("
      << clean << " clean, " << examples.size() - clean << " noisy)\n";

  SelectionConfig sel = cfg.selection;
  sel.params = cfg.classifier;
  const auto entries = select_models(examples, level_db, derive_seed(cfg.seed, 300 + level_bits(level_db)),
                                     sel, cfg.jobs);
  for (const auto& e : entries) save_registry_entry(ws.registry_dir(), e);

  out << "code  action  classifier          features                 accuracy\n";
  for (const auto& e : entries) {
    std::string feats;
    if (e.features.size() == kFeatureCount) {
      feats = "All";
    } else {
      for (auto f : e.features) feats += (feats.empty() ? "" : ",") + std::string(kFeatureNames[f]);
    }
    out << e.code.str() << "  " << std::left << std::setw(6) << to_string(e.code.action()) << "  "
        << std::setw(18) << to_string(e.kind) << "  " << std::setw(23) << feats << "  "
        << format_number(e.accuracy, 1) << "%\n"
        << std::right;
  }
  write_reward_table(ws, load_registry(ws.registry_dir()));
}

void cmd_explain(const Workspace& ws, SelectCode code, std::ostream& out) {
  const auto reg = load_registry(ws.registry_dir());
  if (!reg.contains(code)) {
    throw PreconditionError("no reward model for code " + code.str() + " (run `reward-train --level " +
                            format_level(code.level_db()) + "`)");
  }
  const auto& e = reg.at(code);
  std::filesystem::create_directories(ws.report_dir());
  const auto path = ws.report_dir() / ("lime_" + code.str() + ".csv");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "feature,weight,mean_abs_weight\n";
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    os << kFeatureNames[j] << ',' << format_number(e.lime_mean_weight[j], 8) << ','
       << format_number(e.lime_mean_abs_weight[j], 8) << '\n';
  }
  out << "LIME for " << code.str() << " (" << to_string(e.kind) << ", " << e.lime_instances
      << " instances) -> " << path.string() << '\n';
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    out << "  " << kFeatureNames[j] << "  " << format_number(e.lime_mean_abs_weight[j], 4) << '\n';
  }
}

void cmd_agent_train(const Workspace& ws, double level_db, std::ostream& out) {
  const auto& cfg = ws.config();
  level_bits(level_db);
  const auto reg = load_registry(ws.registry_dir());
  if (!reg.has_level(level_db)) {
    throw PreconditionError("reward models for " + format_level(level_db) +
                            " dB are missing (run `reward-train --level " + format_level(level_db) + "`)");
  }
  const auto nd1 = load_dataset(ws, level_db, 1);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed ^ cfg.seed, 400 + level_bits(level_db));
  std::vector<EpisodeLog> log;
  const auto env = build_env_table(nd1, level_db, reg, ws.reference(), ws.bank());
  const auto ck = train_agent(env, level_db, tc, &log);
  std::filesystem::create_directories(ws.checkpoint_path(level_db).parent_path());
  save_checkpoint(ws.checkpoint_path(level_db), ck);
  std::filesystem::create_directories(ws.report_dir());
  write_training_log(ws.report_dir() / ("training_" + format_level(level_db) + ".csv"), log);

  const auto desired = desired_actions(nd1.sequence);
  const auto res = act(ck, nd1.noisy, ws.reference(), ws.bank());
  double best = 0.0;
  for (const auto& e : log) best = std::max(best, e.ret);
  out << "level " << format_level(level_db) << " dB: " << ck.episodes << " episodes, " << ck.steps
      << " steps, best return " << format_number(best, 0) << "/" << 2 * env.states.size()
      << ", ND1 action accuracy " << format_number(action_accuracy(res.actions, desired), 2)
      << "% -> " << ws.checkpoint_path(level_db).string() << '\n';
}

void cmd_simulate(const Workspace& ws, double level_db, int dataset_id, std::ostream& out) {
  const auto ckpt_path = ws.checkpoint_path(level_db);
  require_file(ckpt_path, "run `agent-train --level " + format_level(level_db) + "`");
  const auto ck = load_checkpoint(ckpt_path);
  const auto ds = load_dataset(ws, level_db, dataset_id);
  const auto res = act(ck, ds.noisy, ws.reference(), ws.bank());
  const auto desired = desired_actions(ds.sequence);

  const auto dir = ws.report_dir() / "simulate";
  std::filesystem::create_directories(dir);
  const std::string tag = format_level(level_db) + "dB_" + ds.name();
  write_semg1(dir / (tag + "_filtered.semg"), res.filtered);
  std::ofstream os(dir / (tag + "_actions.csv"), std::ios::trunc);
  if (!os) throw IoError("cannot write action CSV");
  os << "segment,noise,desired,taken\n";
  for (std::size_t i = 0; i < res.actions.size(); ++i) {
    os << i << ',' << to_string(ds.sequence.kinds[i]) << ',' << to_string(desired[i]) << ','
       << to_string(res.actions[i]) << '\n';
  }
  write_action_svg(dir / (tag + "_actions.svg"), desired, res.actions,
                   "Actions " + ds.name() + " at " + format_level(level_db) + " dB");
  write_signal_svg(dir / (tag + "_signal.svg"), ds.clean, ds.noisy, res.filtered,
                   ds.name() + " at " + format_level(level_db) + " dB: clean, noisy, filtered");
  const auto om = omega(res.filtered, ds.clean, ds.noisy);
  out << ds.name() << " at " << format_level(level_db) << " dB: accuracy "
      << format_number(action_accuracy(res.actions, desired), 2) << "%, omega "
      << (om ? format_number(*om, 4) : "NA") << " -> " << dir.string() << '\n';
}

EvalReport cmd_compare(const Workspace& ws, std::ostream& out) {
  const auto& cfg = ws.config();
  std::vector<std::string> missing;
  for (double l : cfg.levels) {
    if (!std::filesystem::exists(ws.checkpoint_path(l))) missing.push_back(ws.checkpoint_path(l).string());
    if (!std::filesystem::exists(ws.data_dir(l) / "manifest.json")) {
      missing.push_back((ws.data_dir(l) / "manifest.json").string());
    }
  }
  if (!missing.empty()) {
    std::string msg = "compare needs these artifacts:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw PreconditionError(msg);
  }

  struct Cell {
    std::vector<OmegaRow> omega;
    std::vector<SegmentOmegaRow> seg;
    AccuracyRow acc;
    ActionTrace trace;
  };
  EvalReport report;
  for (double level : cfg.levels) {
    const auto ck = load_checkpoint(ws.checkpoint_path(level));
    const auto corpus = read_corpus(ws.data_dir(level));
    std::vector<const NoisyDataset*> test;
    for (const auto& d : corpus) {
      if (!d.train) test.push_back(&d);
    }
    std::vector<Cell> cells(test.size());
    parallel_for(test.size(), cfg.jobs, [&](std::size_t i) {
      const auto& ds = *test[i];
      Cell c;
      auto add = [&](const std::string& method, const SampledSignal& filtered) {
        c.omega.push_back({level, ds.name(), method, omega(filtered, ds.clean, ds.noisy)});
        const auto per = omega_per_segment(filtered, ds.clean, ds.noisy);
        for (std::size_t s = 0; s < per.size(); ++s) c.seg.push_back({level, ds.name(), method, s, per[s]});
      };
      const auto res = act(ck, ds.noisy, ws.reference(), ws.bank());
      add(kAgentMethod, res.filtered);
      for (BaselineKind b : kAllBaselines) add(to_string(b), static_baseline(b, ds.noisy, ws.bank()));
      const auto desired = desired_actions(ds.sequence);
      c.acc = {level, ds.name(), action_accuracy(res.actions, desired)};
      c.trace = {level, ds.name(), desired, res.actions, confusion(res.actions, ds.sequence.kinds)};
      cells[i] = std::move(c);
    });
    for (auto& c : cells) {
      report.omega.insert(report.omega.end(), c.omega.begin(), c.omega.end());
      report.segment_omega.insert(report.segment_omega.end(), c.seg.begin(), c.seg.end());
      report.accuracy.push_back(c.acc);
      report.traces.push_back(std::move(c.trace));
    }
    if (!test.empty()) {
      const auto& ds = *test.front();
      const auto res = act(ck, ds.noisy, ws.reference(), ws.bank());
      std::filesystem::create_directories(ws.report_dir());
      write_signal_svg(ws.report_dir() / ("signal_" + format_level(level) + "dB_" + ds.name() + ".svg"),
                       ds.clean, ds.noisy, res.filtered,
                       ds.name() + " at " + format_level(level) + " dB: clean, noisy, filtered");
    }
  }
  write_report(ws.report_dir(), report);

  out << "mean omega per method (lower is better):\n";
  for (const auto& m : report.methods()) {
    out << "  " << std::left << std::setw(8) << m << std::right;
    for (double l : cfg.levels) {
      const double one[] = {l};
      const auto v = report.mean_omega(m, one);
      out << "  " << std::setw(4) << format_level(l) << " dB " << (v ? format_number(*v, 4) : "NA");
    }
    const auto all = report.mean_omega(m);
    out << "  all " << (all ? format_number(*all, 4) : "NA") << '\n';
  }
  out << "agent action accuracy:\n";
  for (double l : cfg.levels) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& a : report.accuracy) {
      if (a.level_db == l) {
        sum += a.accuracy_pct;
        ++n;
      }
    }
    if (n > 0) out << "  " << format_level(l) << " dB mean " << format_number(sum / static_cast<double>(n), 2) << "%\n";
  }
  out << "reports in " << ws.report_dir().string() << '\n';
  return report;
}

}  // namespace emgdecon
