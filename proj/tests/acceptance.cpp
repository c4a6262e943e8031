// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emgdecon/contamination.hpp"
#include "emgdecon/dqn/agent.hpp"
#include "emgdecon/dqn/qnetwork.hpp"
#include "emgdecon/dqn/replay_buffer.hpp"
#include "emgdecon/eval.hpp"
#include "emgdecon/features.hpp"
#include "emgdecon/filters.hpp"
#include "emgdecon/random.hpp"
#include "emgdecon/reward/lime.hpp"
#include "emgdecon/wavelet.hpp"

#ifndef EMGDECON_CLI_PATH
#error "EMGDECON_CLI_PATH must name the CLI binary"
#endif

namespace fs = std::filesystem;
using namespace emgdecon;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail.clear();
  o.pass = false;
  o.detail += (o.detail.empty() ? "" : "; ") + why;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::vector<double> x(n);
  for (auto& v : x) v = n01(rng);
  return x;
}

// 1
Outcome formula_fidelity() {
  Outcome o;
  Rng rng(101);
  std::uniform_real_distribution<double> power(0.01, 10.0);
  std::uniform_real_distribution<double> level(-10.0, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double pc = power(rng), pn = power(rng);
    double db = level(rng);
    if (std::abs(db) < 0.05) db = 0.05;
    const double hand = pc / (pn * (std::pow(10.0, db / 10.0) - 1.0));
    worst = std::max(worst, std::abs(alpha(pc, pn, db) - hand) / std::max(1.0, std::abs(hand)));
  }
  if (worst > 1e-9) fail(o, "alpha rel err " + sci(worst));

  const auto clean = synth_clean_semg(2.0, 3);
  std::vector<double> y(clean.samples().begin(), clean.samples().end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.4 * std::sin(0.07 * static_cast<double>(i));
  const SampledSignal noisy(y, kSampleRate);
  if (omega(clean, clean, noisy).value() != 0.0) fail(o, "omega(clean) != 0");
  if (omega(noisy, clean, noisy).value() != 1.0) fail(o, "omega(noisy) != 1");

  const auto desired = desired_actions(random_noise_sequence(7));
  auto taken = desired;
  for (std::size_t i = 0; i < 9; ++i) taken[i] = action_from_index((action_index(taken[i]) + 1) % 3);
  const std::string acc = format_number(action_accuracy(taken, desired), 2);
  if (acc != "85.94") fail(o, "accuracy(64, 9 missed) = " + acc);
  if (o.pass) o.detail = "alpha max rel err " + sci(worst) + ", omega 0/1 exact, accuracy " + acc;
  return o;
}

// 2
Outcome contamination_oracle() {
  Outcome o;
  double worst = 0.0;
  std::size_t segments = 0;
  for (double level : {-5.0, -1.0, 1.0, 5.0}) {
    const auto corpus = build_corpus(ContaminationConfig{level, AlphaMode::Standard, 17});
    for (const auto& ds : corpus) {
      const auto c = ds.clean.samples();
      const auto y = ds.noisy.samples();
      for (std::size_t i = 0; i < kSequenceLength; ++i) {
        const double snr = measured_snr(c.subspan(i * kSegmentLength, kSegmentLength),
                                        y.subspan(i * kSegmentLength, kSegmentLength));
        worst = std::max(worst, std::abs(snr - level));
        ++segments;
      }
    }
  }
  if (worst > 0.5) fail(o, "max |SNR - target| = " + fmt(worst, 6) + " dB");
  if (o.pass) o.detail = std::to_string(segments) + " segments, max |SNR - target| " + fmt(worst, 6) + " dB";
  return o;
}

// 3
Outcome filter_envelope() {
  Outcome o;
  const auto& bank = default_filter_bank();
  auto at = [&](FilterAction a, double hz) {
    const std::vector<double> f{hz};
    return magnitude_response(bank.get(a), f, kSampleRate)[0];
  };
  auto stop = [&](FilterAction a, double hz, double limit) {
    const double v = at(a, hz);
    if (v > limit) fail(o, to_string(a) + " at " + fmt(hz, 0) + " Hz is " + fmt(v, 2) + " dB");
  };
  auto pass = [&](FilterAction a, double hz, double lo) {
    const double v = at(a, hz);
    if (v > 0.5 || v < lo) fail(o, to_string(a) + " passband at " + fmt(hz, 0) + " Hz is " + fmt(v, 2) + " dB");
  };
  stop(FilterAction::HPF, 2.0, -60.0);
  stop(FilterAction::NF, 50.0, -40.0);
  stop(FilterAction::LPF, 800.0, -60.0);
  pass(FilterAction::NF, 40.0, -3.0);
  pass(FilterAction::NF, 60.0, -3.0);
  pass(FilterAction::HPF, 100.0, -1.5);
  pass(FilterAction::LPF, 200.0, -1.5);
  for (double hz = 100.0; hz <= 400.0; hz += 10.0) {
    if (std::abs(hz - 150.0) > 10.0) pass(FilterAction::NF, hz, -1.5);
  }

  const auto x = random_signal(5000, 4);
  for (auto a : kAllActions) {
    const auto& f = bank.get(a);
    auto st = zero_state(f);
    const auto batch = filter_samples(f, x, st);
    std::optional<FilterState> carry;
    std::vector<double> streamed;
    for (std::size_t k = 0; k < 5; ++k) {
      std::vector<double> chunk(x.begin() + static_cast<long>(k * 1000), x.begin() + static_cast<long>((k + 1) * 1000));
      auto out = apply_filter(f, Segment(chunk, k), carry);
      carry = out.state;
      streamed.insert(streamed.end(), out.segment.samples().begin(), out.segment.samples().end());
    }
    if (streamed != batch) fail(o, to_string(a) + " streaming differs from batch");
  }

  double worst = 0.0;
  for (auto fam : {WaveletFamily::Db4, WaveletFamily::Sym4}) {
    for (std::size_t n : {1000u, 999u, 4096u}) {
      const auto s = random_signal(n, 30 + n);
      const auto r = waverec(wavedec(s, fam, 3), fam, n);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(s[i] - r[i]));
    }
  }
  if (worst > 1e-8) fail(o, "DWT reconstruction error " + sci(worst));
  if (o.pass) {
    o.detail = "HPF@2Hz " + fmt(at(FilterAction::HPF, 2.0), 1) + " dB, NF@50Hz " +
               fmt(at(FilterAction::NF, 50.0), 1) + " dB, LPF@800Hz " + fmt(at(FilterAction::LPF, 800.0), 1) +
               " dB, streaming exact, DWT err " + sci(worst);
  }
  return o;
}

// 4
Outcome feature_monotonicity() {
  Outcome o;
  const auto ref = make_spectral_reference(synth_clean_semg(120.0, 99));
  struct Case {
    NoiseKind kind;
    FilterAction action;
    double FeatureVector::*ratio;
  };
  const Case cases[] = {{NoiseKind::MOA, FilterAction::HPF, &FeatureVector::smr},
                        {NoiseKind::PLI, FilterAction::NF, &FeatureVector::spr},
                        {NoiseKind::WGN, FilterAction::LPF, &FeatureVector::snr}};
  std::string summary;
  for (double level : {-5.0, -1.0, 1.0, 5.0}) {
    for (const auto& c : cases) {
      std::size_t improved = 0, total = 0;
      for (std::uint64_t rep = 0; total < 500; ++rep) {
        const auto clean = synth_clean_semg(32.0, 500 + rep);
        const NoiseSequence seq{std::vector<NoiseKind>(kSequenceLength, c.kind), 900 + rep};
        const auto ds = contaminate(clean, seq, ContaminationConfig{level, AlphaMode::Standard, 0});
        for (const auto& s : segment_signal(ds.noisy)) {
          if (total == 500) break;
          const auto before = extract_features(s, ref);
          const auto after = affected_features(s, c.action, ref);
          improved += (after.*c.ratio) > (before.*c.ratio);
          ++total;
        }
      }
      const double pct = 100.0 * static_cast<double>(improved) / static_cast<double>(total);
      if (pct < 95.0) fail(o, to_string(c.kind) + " at " + format_level(level) + " dB: " + fmt(pct, 1) + "%");
      summary += (summary.empty() ? "" : " ") + to_string(c.action) + "@" + format_level(level) + "=" + fmt(pct, 1);
    }
  }
  if (o.pass) o.detail = "500 segments per kind and level, improved %: " + summary;
  return o;
}

// 5
Outcome gradient_check() {
  Outcome o;
  Rng rng(12);
  auto make = [](std::uint64_t seed) {
    QNetwork net;
    Rng r(seed);
    net.init(r);
    net.set_input_norm({1.1, 30, 10, 15, 5, 20}, {0.2, 5, 8, 6, 10, 4});
    return net;
  };
  auto net = make(13);
  const auto target = make(14);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> three(0, 2);
  auto state = [&] {
    return FeatureVector{1.0 + std::abs(0.2 * n01(rng)), 30 + 5 * n01(rng), 10 + 8 * n01(rng),
                         15 + 6 * n01(rng), 5 + 10 * n01(rng), 20 + 4 * n01(rng)};
  };
  std::vector<Transition> batch(32);
  for (auto& t : batch) {
    t.s = state();
    t.s_next = state();
    t.a = action_from_index(three(rng));
    t.r = three(rng) == 0 ? 2.0 : 0.0;
    t.terminal = three(rng) == 1;
  }
  const auto res = td_loss_and_grads(net, target, batch, 0.9, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, net.param_count() - 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const std::size_t i = pick(rng);
    auto p = net.params();
    const double keep = p[i];
    p[i] = keep + h;
    const double up = td_loss_and_grads(net, target, batch, 0.9, 0.0).loss;
    p[i] = keep - h;
    const double down = td_loss_and_grads(net, target, batch, 0.9, 0.0).loss;
    p[i] = keep;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(res.grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - res.grad[i]) / denom);
  }
  if (worst > 1e-4) fail(o, "max rel err " + sci(worst));
  if (o.pass) o.detail = "100 probes, max rel err " + sci(worst);
  return o;
}

// 9
Outcome lime_sanity() {
  Outcome o;
  const std::vector<double> w{3.0, -0.2, 1.5, 0.05, -2.2, 0.7};
  std::vector<double> abs_w;
  for (double v : w) abs_w.push_back(std::abs(v));
  const ScoreFn model = [&](std::span<const double> r) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * r[j];
    return s;
  };
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed * 7919);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd bg(200, 6);
    for (Eigen::Index i = 0; i < bg.rows(); ++i) {
      for (int j = 0; j < 6; ++j) bg(i, j) = n01(rng);
    }
    std::vector<double> inst(6);
    for (auto& v : inst) v = 0.5 * n01(rng);
    const auto e = lime_explain(model, inst, bg, seed);
    std::vector<double> abs_e;
    for (double v : e.weights) abs_e.push_back(std::abs(v));
    sum += spearman(abs_e, abs_w);
  }
  const double mean = sum / 10.0;
  if (mean < 0.9) fail(o, "mean Spearman " + fmt(mean));
  if (o.pass) o.detail = "mean Spearman over 10 seeds " + fmt(mean);
  return o;
}

int run_cli(const fs::path& root, const std::string& args) {
  const std::string cmd = "EMGDECON_DIR='" + root.string() + "' '" EMGDECON_CLI_PATH "' " + args +
                          " >> '" + (root / "cli.log").string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool run_pipeline(const fs::path& root, std::string& err) {
  fs::remove_all(root);
  fs::create_directories(root);
  for (const char* step : {"init", "gen", "reward-train", "agent-train", "compare"}) {
    const int code = run_cli(root, step);
    if (code != 0) {
      err = std::string(step) + " exited " + std::to_string(code) + " (see " + (root / "cli.log").string() + ")";
      return false;
    }
  }
  return true;
}

// 6
Outcome reward_quality(const fs::path& reports) {
  Outcome o;
  std::string info;
  for (const auto& r : read_csv(reports / "reward_models.csv")) {
    const double level = std::stod(r.at(1));
    const double acc = std::stod(r.at(5));
    info += (info.empty() ? "" : " ") + r.at(0) + "=" + r.at(5);
    if (level == 5.0) continue;
    const double bar = level == -5.0 ? 75.0 : 85.0;
    if (acc < bar) fail(o, r.at(0) + " " + r.at(5) + "% < " + fmt(bar, 0) + "%");
  }
  if (info.empty()) fail(o, "reward_models.csv is empty");
  if (o.pass) o.detail = "held-out accuracy % (+5 dB report-only): " + info;
  return o;
}

// 7
Outcome agent_performance(const fs::path& reports) {
  Outcome o;
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& r : read_csv(reports / "accuracy.csv")) {
    const double acc = std::stod(r.at(2));
    auto [it, fresh] = range.try_emplace(r.at(0), acc, acc);
    it->second.first = std::min(it->second.first, acc);
    it->second.second = std::max(it->second.second, acc);
    const double level = std::stod(r.at(0));
    if (level == 5.0) continue;
    const double bar = level == -5.0 ? 70.0 : 85.0;
    if (acc < bar) fail(o, r.at(0) + " dB " + r.at(1) + " " + r.at(2) + "% < " + fmt(bar, 0) + "%");
  }
  std::string info;
  for (const auto& [lvl, mm] : range) {
    info += (info.empty() ? "" : ", ") + lvl + " dB " + fmt(mm.first, 2) + ".." + fmt(mm.second, 2);
  }
  if (range.empty()) fail(o, "accuracy.csv is empty");
  if (o.pass) o.detail = "held-out ND2-ND9 accuracy % (+5 dB report-only): " + info;
  return o;
}

// 8
Outcome comparative_claim(const fs::path& reports) {
  Outcome o;
  std::map<std::string, std::pair<double, std::size_t>> all;
  std::map<std::string, std::pair<double, std::size_t>> agent_by_level;
  for (const auto& r : read_csv(reports / "omega.csv")) {
    const double level = std::stod(r.at(0));
    if (level == 5.0 || r.at(3) == "NA") continue;
    auto& a = all[r.at(2)];
    a.first += std::stod(r.at(3));
    ++a.second;
    if (r.at(2) == "supDQN") {
      auto& b = agent_by_level[r.at(0)];
      b.first += std::stod(r.at(3));
      ++b.second;
    }
  }
  if (!all.contains("supDQN")) {
    fail(o, "no supDQN rows in omega.csv");
    return o;
  }
  const double agent = all["supDQN"].first / static_cast<double>(all["supDQN"].second);
  std::string info = "supDQN " + fmt(agent);
  for (const auto& [m, s] : all) {
    if (m == "supDQN") continue;
    const double v = s.first / static_cast<double>(s.second);
    info += ", " + m + " " + fmt(v);
    if (!(agent < v)) fail(o, "supDQN " + fmt(agent) + " not below " + m + " " + fmt(v));
  }
  if (!(agent < 1.0)) fail(o, "supDQN mean omega " + fmt(agent) + " >= 1");
  for (const auto& [lvl, s] : agent_by_level) {
    const double v = s.first / static_cast<double>(s.second);
    if (!(v < 1.0)) fail(o, "supDQN mean omega at " + lvl + " dB is " + fmt(v));
  }
  if (o.pass) o.detail = "mean omega over -5/-1/+1 dB: " + info;
  return o;
}

// 10
Outcome reproducibility(const fs::path& a, const fs::path& b) {
  Outcome o;
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel)) {
      fail(o, rel.string() + " missing in second run");
      continue;
    }
    if (slurp(e.path()) != slurp(b / rel)) fail(o, rel.string() + " differs");
    ++compared;
  }
  if (compared == 0) fail(o, "no CSV files found");
  if (o.pass) o.detail = std::to_string(compared) + " CSV files byte-identical across two runs";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "emgdecon_acceptance";
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << n << ' ' << name << ": " << o.detail << std::endl;
  };

  report(1, "formula fidelity", formula_fidelity);
  report(2, "contamination oracle", contamination_oracle);
  report(3, "filter envelope", filter_envelope);
  report(4, "feature monotonicity", feature_monotonicity);
  report(5, "gradient check", gradient_check);

  const fs::path run_a = work / "run_a";
  const fs::path run_b = work / "run_b";
  std::string err_a, err_b;
  const bool ok_a = run_pipeline(run_a, err_a);
  auto need_a = [&](const std::function<Outcome(const fs::path&)>& f) {
    return [&, f] {
      if (!ok_a) return Outcome{false, "pipeline failed: " + err_a};
      return f(run_a / "reports");
    };
  };
  report(6, "reward-model quality", need_a(reward_quality));
  report(7, "agent performance", need_a(agent_performance));
  report(8, "comparative claim", need_a(comparative_claim));
  report(9, "LIME sanity", lime_sanity);
  report(10, "reproducibility", [&] {
    if (!ok_a) return Outcome{false, "first pipeline failed: " + err_a};
    if (!run_pipeline(run_b, err_b)) return Outcome{false, "second pipeline failed: " + err_b};
    return reproducibility(run_a, run_b);
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
