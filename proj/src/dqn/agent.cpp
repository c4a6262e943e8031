#include "emgdecon/dqn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <bit>

#include "emgdecon/error.hpp"

namespace emgdecon {

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw PreconditionError("train: gamma must be in [0, 1)");
  if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0)) {
    throw PreconditionError("train: need 0 <= eps_end <= eps_start <= 1");
  }
  if (eps_decay < 0.0) throw PreconditionError("train: negative eps_decay");
  if (episodes == 0 || max_steps == 0 || batch == 0 || target_sync == 0) {
    throw PreconditionError("train: episodes, max_steps, batch and target_sync must be positive");
  }
  if (replay_capacity < batch) throw PreconditionError("train: replay capacity below batch size");
  if (!(lr > 0.0)) throw PreconditionError("train: learning rate must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"episodes", c.episodes},       {"max_steps", c.max_steps},
          {"lr", c.lr},                   {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},   {"grad_clip", c.grad_clip},
          {"gamma", c.gamma},             {"eps_start", c.eps_start},
          {"eps_end", c.eps_end},         {"eps_decay", c.eps_decay},
          {"batch", c.batch},             {"target_sync", c.target_sync},
          {"replay_capacity", c.replay_capacity}, {"hidden", c.hidden},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("episodes", c.episodes);
  get("max_steps", c.max_steps);
  get("lr", c.lr);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("grad_clip", c.grad_clip);
  get("gamma", c.gamma);
  get("eps_start", c.eps_start);
  get("eps_end", c.eps_end);
  get("eps_decay", c.eps_decay);
  get("batch", c.batch);
  get("target_sync", c.target_sync);
  get("replay_capacity", c.replay_capacity);
  get("hidden", c.hidden);
  get("seed", c.seed);
  return c;
}

double epsilon_at(std::uint64_t step, const TrainConfig& cfg) {
  return std::max(cfg.eps_end, cfg.eps_start - cfg.eps_decay * static_cast<double>(step));
}

FilterAction greedy_action(const QValues& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return action_from_index(static_cast<int>(best));
}

FilterAction epsilon_greedy(const QValues& q, double eps, Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw PreconditionError("epsilon must be in [0, 1]");
  // Always consume the same draws so the stream does not depend on eps.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const int r = std::uniform_int_distribution<int>(0, kActionCount - 1)(rng);
  return u < eps ? action_from_index(r) : greedy_action(q);
}

TdResult td_loss_and_grads(const QNetwork& net, const QNetwork& target,
                           std::span<const Transition> batch, double gamma, double grad_clip) {
  if (batch.empty()) throw PreconditionError("td_loss_and_grads: empty batch");
  TdResult out;
  out.grad.assign(net.param_count(), 0.0);
  const double n = static_cast<double>(batch.size());
  for (const auto& t : batch) {
    double y = t.r;
    if (!t.terminal) {
      const auto qn = target.forward(t.s_next);
      y += gamma * *std::max_element(qn.begin(), qn.end());
    }
    const auto sx = t.s.to_array();
    const auto q = net.forward(std::span<const double>(sx));
    const auto ai = static_cast<std::size_t>(action_index(t.a));
    const double err = q[ai] - y;
    out.loss += err * err / n;
    QValues dq{0.0, 0.0, 0.0};
    dq[ai] = 2.0 * err / n;
    net.backward(sx, dq, out.grad);
  }
  out.grad_norm = clip_grad_norm(out.grad, grad_clip);
  return out;
}

EnvTable build_env_table(const NoisyDataset& env, double level_db, const ModelRegistry& registry,
                         const SpectralReference& ref, const FilterBank& bank) {
  if (!registry.has_level(level_db)) {
    throw PreconditionError("reward registry has no models for " + std::to_string(level_db) + " dB");
  }
  const auto segs = segment_signal(env.noisy);
  EnvTable t;
  for (const auto& s : segs) {
    t.states.push_back(extract_features(s, ref));
    QValues r{};
    for (FilterAction a : kAllActions) {
      r[static_cast<std::size_t>(action_index(a))] =
          reward(affected_features(s, a, ref, bank), SelectCode::make(level_db, a), registry);
    }
    t.rewards.push_back(r);
  }
  return t;
}

AgentCheckpoint train_agent(const EnvTable& env, double level_db, const TrainConfig& cfg,
                            std::vector<EpisodeLog>* log) {
  cfg.validate();
  if (env.states.empty() || env.states.size() != env.rewards.size()) {
    throw PreconditionError("train_agent: malformed environment");
  }
  const std::size_t horizon = std::min(cfg.max_steps, env.states.size());

  Rng rng(cfg.seed);
  AgentCheckpoint ck{cfg, level_db, QNetwork(cfg.hidden), QNetwork(cfg.hidden), {}, 0, 0, {}};
  for (FilterAction a : kAllActions) ck.registry_codes.push_back(SelectCode::make(level_db, a).str());

  // Input statistics from the environment's own states.
  std::vector<double> mean(kFeatureCount, 0.0), scale(kFeatureCount, 0.0);
  for (const auto& s : env.states) {
    const auto a = s.to_array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += a[j];
  }
  for (auto& m : mean) m /= static_cast<double>(env.states.size());
  for (const auto& s : env.states) {
    const auto a = s.to_array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) scale[j] += (a[j] - mean[j]) * (a[j] - mean[j]);
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(env.states.size()));
    if (!(s > 0.0)) s = 1.0;
  }
  ck.net.set_input_norm(mean, scale);
  ck.net.init(rng);
  ck.target = ck.net;
  ck.adam = make_adam_state(ck.net.param_count());
  const AdamConfig adam{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8};

  ReplayBuffer buffer(cfg.replay_capacity);
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    double ret = 0.0, loss_sum = 0.0;
    std::size_t updates = 0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const auto& s = env.states[t];
      const double eps = epsilon_at(ck.steps, cfg);
      const FilterAction a = epsilon_greedy(ck.net.forward(s), eps, rng);
      const double r = env.rewards[t][static_cast<std::size_t>(action_index(a))];
      const bool terminal = t + 1 == horizon;
      buffer.push({s, a, r, terminal ? s : env.states[t + 1], terminal});
      ret += r;
      if (buffer.size() >= cfg.batch) {
        const auto batch = buffer.sample(cfg.batch, rng);
        auto td = td_loss_and_grads(ck.net, ck.target, batch, cfg.gamma, cfg.grad_clip);
        if (!std::isfinite(td.loss)) throw NumericError("train_agent: non-finite TD loss");
        adam_step(ck.adam, ck.net.params(), td.grad, adam);
        loss_sum += td.loss;
        ++updates;
      }
      ++ck.steps;
      if (ck.steps % cfg.target_sync == 0) ck.target = ck.net;
    }
    ++ck.episodes;
    if (log != nullptr) {
      log->push_back({ep + 1, ret, updates > 0 ? loss_sum / static_cast<double>(updates) : 0.0,
                      epsilon_at(ck.steps, cfg)});
    }
  }
  for (double v : ck.net.params()) {
    if (!std::isfinite(v)) throw NumericError("train_agent: parameters diverged");
  }
  return ck;
}

AgentCheckpoint train_agent(const NoisyDataset& env, double level_db,
                            const ModelRegistry& registry, const SpectralReference& ref,
                            const TrainConfig& cfg, std::vector<EpisodeLog>* log) {
  return train_agent(build_env_table(env, level_db, registry, ref), level_db, cfg, log);
}

void write_training_log(const std::filesystem::path& path, std::span<const EpisodeLog> log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "episode,return,mean_loss,eps\n";
  os.precision(10);
  for (const auto& e : log) os << e.episode << ',' << e.ret << ',' << e.mean_loss << ',' << e.eps << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

ActResult act(const AgentCheckpoint& ckpt, const SampledSignal& noisy,
              const SpectralReference& ref, const FilterBank& bank) {
  if (noisy.rate() != kSampleRate || noisy.size() % kSegmentLength != 0) {
    throw PreconditionError("act: input must be whole 1000-sample segments at 2 kHz");
  }
  const auto segs = segment_signal(noisy);
  std::vector<FilterAction> actions;
  std::vector<Segment> out;
  for (const auto& s : segs) {
    const FilterAction a = greedy_action(ckpt.net.forward(extract_features(s, ref)));
    actions.push_back(a);
    out.push_back(apply_filter(bank.get(a), s).segment);
  }
  return {std::move(actions), concatenate(out)};
}

namespace {

void append(std::vector<double>& blob, std::span<const double> v) {
  blob.insert(blob.end(), v.begin(), v.end());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const AgentCheckpoint& ck) {
  const std::size_t n = ck.net.param_count();
  nlohmann::json h = {{"format", "emgdecon-checkpoint-1"},
                      {"config", to_json(ck.config)},
                      {"level_db", ck.level_db},
                      {"layers", ck.net.layer_sizes()},
                      {"param_count", n},
                      {"steps", ck.steps},
                      {"episodes", ck.episodes},
                      {"adam_t", ck.adam.t},
                      {"registry_codes", ck.registry_codes},
                      {"blob_layout", {"theta", "target_theta", "adam_m", "adam_v", "input_mean", "input_scale"}}};
  std::vector<double> blob;
  append(blob, ck.net.params());
  append(blob, ck.target.params());
  append(blob, ck.adam.m);
  append(blob, ck.adam.v);
  append(blob, ck.net.input_mean());
  append(blob, ck.net.input_scale());
  h["blob_doubles"] = blob.size();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  os << h.dump() << '\n';
  for (double v : blob) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    os.write(buf, 8);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

AgentCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty checkpoint " + path.string());
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("format").get<std::string>() != "emgdecon-checkpoint-1") {
      throw IoError("unknown checkpoint format");
    }
    const auto layers = h.at("layers").get<std::vector<std::size_t>>();
    if (layers.size() < 2) throw IoError("checkpoint: bad layer list");
    const auto cfg = train_config_from_json(h.at("config"));
    std::vector<std::size_t> hidden(layers.begin() + 1, layers.end() - 1);
    AgentCheckpoint ck{cfg, h.at("level_db").get<double>(), QNetwork(hidden, layers.front(), layers.back()),
                       QNetwork(hidden, layers.front(), layers.back()), {}, h.at("steps").get<std::uint64_t>(),
                       h.at("episodes").get<std::uint64_t>(),
                       h.at("registry_codes").get<std::vector<std::string>>()};
    const std::size_t n = ck.net.param_count();
    const std::size_t d = layers.front();
    const auto count = h.at("blob_doubles").get<std::size_t>();
    if (h.at("param_count").get<std::size_t>() != n || count != 4 * n + 2 * d) {
      throw IoError("checkpoint: blob size does not match the network");
    }
    std::vector<double> blob(count);
    for (auto& v : blob) {
      unsigned char buf[8];
      if (!is.read(reinterpret_cast<char*>(buf), 8)) throw IoError("checkpoint: truncated blob");
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
      v = std::bit_cast<double>(bits);
    }
    std::span<const double> b(blob);
    ck.net.set_params(b.subspan(0, n));
    ck.target.set_params(b.subspan(n, n));
    ck.adam.m.assign(b.begin() + static_cast<std::ptrdiff_t>(2 * n), b.begin() + static_cast<std::ptrdiff_t>(3 * n));
    ck.adam.v.assign(b.begin() + static_cast<std::ptrdiff_t>(3 * n), b.begin() + static_cast<std::ptrdiff_t>(4 * n));
    ck.adam.t = h.at("adam_t").get<std::uint64_t>();
    std::vector<double> mean(b.begin() + static_cast<std::ptrdiff_t>(4 * n), b.begin() + static_cast<std::ptrdiff_t>(4 * n + d));
    std::vector<double> scale(b.begin() + static_cast<std::ptrdiff_t>(4 * n + d), b.end());
    ck.net.set_input_norm(mean, scale);
    ck.target.set_input_norm(std::move(mean), std::move(scale));
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  }
}

}  // namespace emgdecon
