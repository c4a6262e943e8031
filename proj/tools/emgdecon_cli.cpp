// emgdecon command-line front end.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "emgdecon/error.hpp"
#include "emgdecon/experiment.hpp"

namespace fs = std::filesystem;
using namespace emgdecon;

namespace {

double parse_level(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw PreconditionError("--level expects a number, got '" + s + "'");
  level_bits(v);
  return v;
}

int parse_dataset(const std::string& s) {
  std::string digits = s;
  if (digits.rfind("ND", 0) == 0 || digits.rfind("nd", 0) == 0) digits = digits.substr(2);
  if (digits.size() != 1 || digits[0] < '1' || digits[0] > '9') {
    throw PreconditionError("--dataset expects ND1..ND9, got '" + s + "'");
  }
  return digits[0] - '0';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emgdecon: sEMG decontamination workbench (filter-selecting Q-learning agent)"};
  app.require_subcommand(1);

  std::string config_opt;
  std::optional<std::uint64_t> seed_opt;
  std::optional<unsigned> jobs_opt;
  std::string level_opt;
  std::string dataset_opt;
  std::string code_opt;
  bool force = false;

  app.add_option("--config", config_opt, "config file (default <root>/emgdecon.json)");
  app.add_option("--seed", seed_opt, "override the master seed");
  app.add_option("--jobs", jobs_opt, "worker threads")->check(CLI::PositiveNumber);

  auto* init = app.add_subcommand("init", "write the default config");
  init->add_flag("--force", force, "overwrite an existing config");
  auto* gen = app.add_subcommand("gen", "generate clean signals and noisy datasets");
  gen->add_option("--level", level_opt, "one SNR level in dB (default: all configured)");
  auto* rtrain = app.add_subcommand("reward-train", "train and select the reward classifiers");
  rtrain->add_option("--level", level_opt, "one SNR level in dB (default: all configured)");
  auto* explain = app.add_subcommand("explain", "write the LIME report for a select code");
  explain->add_option("code", code_opt, "four-bit select code, e.g. 0110")->required();
  auto* atrain = app.add_subcommand("agent-train", "train the Q-learning agent");
  atrain->add_option("--level", level_opt, "one SNR level in dB (default: all configured)");
  auto* sim = app.add_subcommand("simulate", "run a trained agent on one dataset");
  sim->add_option("--level", level_opt, "SNR level in dB")->required();
  sim->add_option("--dataset", dataset_opt, "dataset id, ND1..ND9")->required();
  auto* cmp = app.add_subcommand("compare", "score the agents and the static baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const char* env_root = std::getenv("EMGDECON_DIR");
    const fs::path root = env_root != nullptr && *env_root != '\0' ? fs::path(env_root) : fs::current_path();
    const fs::path config_path = config_opt.empty() ? root / "emgdecon.json" : fs::path(config_opt);

    if (init->parsed()) {
      cmd_init(config_path, force, std::cout);
      return 0;
    }

    ExperimentConfig cfg = load_config(config_path);
    if (seed_opt) cfg.seed = *seed_opt;
    if (jobs_opt) cfg.jobs = *jobs_opt;
    const Workspace ws(root, cfg);
    std::vector<double> levels = cfg.levels;
    if (!level_opt.empty()) levels = {parse_level(level_opt)};

    if (gen->parsed()) {
      cmd_gen(ws, levels, std::cout);
    } else if (rtrain->parsed()) {
      for (double l : levels) cmd_reward_train(ws, l, std::cout);
    } else if (explain->parsed()) {
      cmd_explain(ws, SelectCode::parse(code_opt), std::cout);
    } else if (atrain->parsed()) {
      for (double l : levels) cmd_agent_train(ws, l, std::cout);
    } else if (sim->parsed()) {
      cmd_simulate(ws, parse_level(level_opt), parse_dataset(dataset_opt), std::cout);
    } else if (cmp->parsed()) {
      cmd_compare(ws, std::cout);
    }
    return 0;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
