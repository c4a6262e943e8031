#include "emgdecon/reward/registry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "emgdecon/blob_io.hpp"
#include "emgdecon/error.hpp"
#include "emgdecon/parallel.hpp"
#include "emgdecon/random.hpp"

namespace emgdecon {

unsigned level_bits(double level_db) {
  for (unsigned i = 0; i < kNoiseLevels.size(); ++i) {
    if (kNoiseLevels[i] == level_db) return i;
  }
  throw PreconditionError("noise level must be one of -5, -1, 1, 5 dB");
}

SelectCode SelectCode::make(double level_db, FilterAction action) {
  return SelectCode((level_bits(level_db) << 2) | static_cast<unsigned>(action));
}

SelectCode SelectCode::from_bits(unsigned bits) {
  if (bits > 15 || (bits & 3u) == 0) {
    throw PreconditionError("invalid select code " + std::to_string(bits));
  }
  return SelectCode(bits);
}

SelectCode SelectCode::parse(std::string_view s) {
  if (s.size() != 4 || s.find_first_not_of("01") != std::string_view::npos) {
    throw PreconditionError("select code must be four binary digits: " + std::string(s));
  }
  unsigned bits = 0;
  for (char c : s) bits = (bits << 1) | static_cast<unsigned>(c - '0');
  return from_bits(bits);
}

std::string SelectCode::str() const {
  std::string s(4, '0');
  for (int i = 0; i < 4; ++i) {
    if (bits_ & (1u << (3 - i))) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

FilterAction desired_action(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::MOA: return FilterAction::HPF;
    case NoiseKind::PLI: return FilterAction::NF;
    case NoiseKind::WGN: return FilterAction::LPF;
  }
  throw PreconditionError("bad noise kind");
}

bool label_clean(NoiseKind kind, FilterAction action) { return desired_action(kind) == action; }

std::vector<LabeledExample> build_reward_training_set(const NoisyDataset& nd, double level_db,
                                                      const SpectralReference& ref,
                                                      const FilterBank& bank,
                                                      const FeatureConfig& fcfg) {
  const auto segs = segment_signal(nd.noisy);
  if (segs.empty()) throw PreconditionError("build_reward_training_set: empty dataset");
  if (segs.size() != nd.sequence.kinds.size()) {
    throw PreconditionError("build_reward_training_set: sequence does not match segments");
  }
  if (nd.config.target_snr_db != level_db) {
    throw PreconditionError("build_reward_training_set: dataset level differs from requested level");
  }
  std::vector<LabeledExample> out;
  out.reserve(3 * segs.size());
  for (const auto& s : segs) {
    const NoiseKind k = nd.sequence.kinds[s.index()];
    for (FilterAction a : kAllActions) {
      out.push_back({affected_features(s, a, ref, bank, fcfg), label_clean(k, a), k, a, level_db,
                     s.index()});
    }
  }
  return out;
}

Eigen::MatrixXd feature_matrix(std::span<const LabeledExample> ex) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ex.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto a = ex[i].features.to_array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[j];
    }
  }
  return x;
}

Labels label_vector(std::span<const LabeledExample> ex) {
  Labels y;
  y.reserve(ex.size());
  for (const auto& e : ex) y.push_back(e.clean ? 1 : 0);
  return y;
}

Split stratified_split(const Labels& y, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw PreconditionError("split fraction outside (0, 1)");
  Rng rng(seed);
  Split s;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto nv = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    s.val.insert(s.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nv));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(nv), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Labels labels_of(const Labels& y, const std::vector<std::size_t>& idx) {
  Labels out;
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

}  // namespace

RegistryEntry select_model(std::span<const LabeledExample> level_set, double level_db,
                           FilterAction action, std::uint64_t seed, const SelectionConfig& cfg,
                           unsigned jobs) {
  std::vector<LabeledExample> ex;
  for (const auto& e : level_set) {
    if (e.action == action) ex.push_back(e);
  }
  if (ex.empty()) throw PreconditionError("select_model: no examples for " + to_string(action));
  const auto x = feature_matrix(ex);
  const auto y = label_vector(ex);
  const auto aseed = derive_seed(seed, static_cast<std::uint64_t>(action));
  const auto split = stratified_split(y, cfg.val_fraction, derive_seed(aseed, 1));
  const auto xtr = rows_of(x, split.train), xva = rows_of(x, split.val);
  const auto ytr = labels_of(y, split.train), yva = labels_of(y, split.val);
  if (split.val.empty()) throw PreconditionError("select_model: empty validation split");

  RegistryEntry entry;
  entry.code = SelectCode::make(level_db, action);
  entry.train_count = split.train.size();
  entry.val_count = split.val.size();

  std::vector<std::shared_ptr<const TrainedModel>> cands(kAllClassifiers.size());
  std::vector<double> acc(kAllClassifiers.size());
  parallel_for(kAllClassifiers.size(), jobs, [&](std::size_t i) {
    const auto kind = kAllClassifiers[i];
    cands[i] = std::make_shared<const TrainedModel>(train_classifier(
        kind, xtr, ytr, derive_seed(aseed, 100 + i), {}, cfg.params));
    acc[i] = cands[i]->accuracy(xva, yva);
  });
  std::size_t best = 0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    entry.candidate_accuracy[kAllClassifiers[i]] = acc[i];
    if (acc[i] > acc[best]) best = i;
  }
  entry.kind = kAllClassifiers[best];
  entry.all_features_accuracy = acc[best];
  entry.accuracy = acc[best];
  entry.model = cands[best];
  entry.features = entry.model->features();

  // LIME over the validation rows, background = the whole level set.
  const auto background = feature_matrix(level_set);
  const auto& model = *entry.model;
  const ScoreFn fn = [&model](std::span<const double> r) { return model.score(r); };
  const std::size_t n_inst = std::min(cfg.lime_instances, split.val.size());
  std::vector<LimeExplanation> expl(n_inst);
  parallel_for(n_inst, jobs, [&](std::size_t i) {
    const auto row = ex[split.val[i]].features.to_array();
    expl[i] = lime_explain(fn, row, background, derive_seed(aseed, 1000 + i), cfg.lime);
  });
  for (const auto& e : expl) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      entry.lime_mean_weight[j] += e.weights[j] / static_cast<double>(n_inst);
      entry.lime_mean_abs_weight[j] += std::abs(e.weights[j]) / static_cast<double>(n_inst);
    }
  }
  entry.lime_instances = n_inst;

  std::vector<std::size_t> order(kFeatureCount);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return entry.lime_mean_abs_weight[a] > entry.lime_mean_abs_weight[b];
  });

  double best_sub_acc = -1.0;
  std::shared_ptr<const TrainedModel> best_sub;
  for (std::size_t k : cfg.subset_sizes) {
    if (k == 0 || k >= kFeatureCount) continue;  // k = 6 is the all-features model
    std::vector<std::size_t> feats(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(feats.begin(), feats.end());
    auto m = std::make_shared<const TrainedModel>(train_classifier(
        entry.kind, xtr, ytr, derive_seed(aseed, 200 + k), feats, cfg.params));
    const double a = m->accuracy(xva, yva);
    if (a > best_sub_acc) {
      best_sub_acc = a;
      best_sub = std::move(m);
    }
  }
  if (best_sub && best_sub_acc > entry.all_features_accuracy) {
    entry.model = best_sub;
    entry.accuracy = best_sub_acc;
    entry.features = best_sub->features();
  }
  return entry;
}

std::vector<RegistryEntry> select_models(std::span<const LabeledExample> level_set,
                                         double level_db, std::uint64_t seed,
                                         const SelectionConfig& cfg, unsigned jobs) {
  std::vector<RegistryEntry> out;
  for (FilterAction a : kAllActions) out.push_back(select_model(level_set, level_db, a, seed, cfg, jobs));
  return out;
}

void ModelRegistry::insert(RegistryEntry e) {
  if (!e.model) throw PreconditionError("registry entry without a model");
  const unsigned key = e.code.bits();
  entries_.insert_or_assign(key, std::move(e));
}

const RegistryEntry& ModelRegistry::at(SelectCode c) const {
  const auto it = entries_.find(c.bits());
  if (it == entries_.end()) {
    throw PreconditionError("no reward model registered for code " + c.str());
  }
  return it->second;
}

bool ModelRegistry::has_level(double level_db) const {
  return std::all_of(kAllActions.begin(), kAllActions.end(),
                     [&](FilterAction a) { return contains(SelectCode::make(level_db, a)); });
}

double reward(const FeatureVector& affected, SelectCode code, const ModelRegistry& registry) {
  const auto row = affected.to_array();
  return registry.at(code).model->predict_clean(row) ? 2.0 : 0.0;
}

void save_registry_entry(const std::filesystem::path& dir, const RegistryEntry& e) {
  std::filesystem::create_directories(dir);
  const auto ser = serialize_model(*e.model);
  nlohmann::json cand = nlohmann::json::object();
  for (const auto& [k, a] : e.candidate_accuracy) cand[to_string(k)] = a;
  std::vector<std::string> names;
  for (auto f : e.features) names.emplace_back(kFeatureNames[f]);
  nlohmann::json j = {{"code", e.code.str()},
                      {"level_db", e.code.level_db()},
                      {"action", to_string(e.code.action())},
                      {"kind", to_string(e.kind)},
                      {"features", names},
                      {"accuracy", e.accuracy},
                      {"all_features_accuracy", e.all_features_accuracy},
                      {"candidate_accuracy", cand},
                      {"lime_mean_weight", e.lime_mean_weight},
                      {"lime_mean_abs_weight", e.lime_mean_abs_weight},
                      {"lime_instances", e.lime_instances},
                      {"train_count", e.train_count},
                      {"val_count", e.val_count},
                      {"model", ser.meta},
                      {"blob", e.code.str() + ".bin"}};
  std::ofstream os(dir / (e.code.str() + ".json"), std::ios::trunc);
  if (!os) throw IoError("cannot write registry entry in " + dir.string());
  os << j.dump(2) << '\n';
  write_f64_blob(dir / (e.code.str() + ".bin"), ser.blob);
}

ModelRegistry load_registry(const std::filesystem::path& dir) {
  ModelRegistry reg;
  if (!std::filesystem::is_directory(dir)) return reg;
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() == ".json") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream is(p);
    try {
      const auto j = nlohmann::json::parse(is);
      RegistryEntry e;
      e.code = SelectCode::parse(j.at("code").get<std::string>());
      e.kind = classifier_from_string(j.at("kind").get<std::string>());
      e.accuracy = j.at("accuracy").get<double>();
      e.all_features_accuracy = j.at("all_features_accuracy").get<double>();
      for (const auto& [k, v] : j.at("candidate_accuracy").items()) {
        e.candidate_accuracy[classifier_from_string(k)] = v.get<double>();
      }
      e.lime_mean_weight = j.at("lime_mean_weight").get<std::array<double, kFeatureCount>>();
      e.lime_mean_abs_weight = j.at("lime_mean_abs_weight").get<std::array<double, kFeatureCount>>();
      e.lime_instances = j.at("lime_instances").get<std::size_t>();
      e.train_count = j.at("train_count").get<std::size_t>();
      e.val_count = j.at("val_count").get<std::size_t>();
      const auto blob = read_f64_blob(dir / j.at("blob").get<std::string>());
      e.model = std::make_shared<const TrainedModel>(deserialize_model(j.at("model"), blob));
      e.features = e.model->features();
      reg.insert(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw IoError("bad registry file " + p.string() + ": " + ex.what());
    }
  }
  return reg;
}

}  // namespace emgdecon
