#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "support.hpp"

#ifndef EMGDECON_CLI_PATH
#error "EMGDECON_CLI_PATH must name the CLI binary"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string err;
};

Run run(const fs::path& root, const std::string& args) {
  const auto err = root / "stderr.txt";
  const std::string cmd = "EMGDECON_DIR='" + root.string() + "' '" EMGDECON_CLI_PATH "' " + args +
                          " > '" + (root / "stdout.txt").string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), testsupport::slurp(err)};
}

void edit_config(const fs::path& root, const std::function<void(nlohmann::json&)>& f) {
  const auto path = root / "emgdecon.json";
  auto j = nlohmann::json::parse(testsupport::slurp(path));
  f(j);
  std::ofstream(path, std::ios::trunc) << j.dump(2);
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("init refuses to overwrite without --force") {
  testsupport::TempDir dir("cli_init");
  CHECK(run(dir.path(), "init").code == 0);
  CHECK(fs::exists(dir.path() / "emgdecon.json"));
  const auto second = run(dir.path(), "init");
  CHECK(second.code == 2);
  CHECK(second.err.find("--force") != std::string::npos);
  CHECK(run(dir.path(), "init --force").code == 0);
}

TEST_CASE("commands without a config fail with an i/o error") {
  testsupport::TempDir dir("cli_noconfig");
  CHECK(run(dir.path(), "gen").code == 4);
}

TEST_CASE("bad arguments are precondition errors") {
  testsupport::TempDir dir("cli_args");
  REQUIRE(run(dir.path(), "init").code == 0);
  CHECK(run(dir.path(), "gen --level 3").code == 2);
  CHECK(run(dir.path(), "gen --level abc").code == 2);
  CHECK(run(dir.path(), "explain 0000").code == 2);
  CHECK(run(dir.path(), "simulate --level -1 --dataset ND0").code == 2);
  CHECK(run(dir.path(), "frobnicate").code == 2);
}

TEST_CASE("literal alpha at 0 dB is a numeric error") {
  testsupport::TempDir dir("cli_literal");
  REQUIRE(run(dir.path(), "init").code == 0);
  edit_config(dir.path(), [](nlohmann::json& j) {
    j["levels"] = {0.0};
    j["alpha_mode"] = "literal";
  });
  CHECK(run(dir.path(), "gen").code == 3);
}

TEST_CASE("pipeline at one level") {
  testsupport::TempDir dir("cli_pipeline");
  const auto& root = dir.path();
  REQUIRE(run(root, "init").code == 0);
  edit_config(root, [](nlohmann::json& j) {
    j["levels"] = {-1.0, 5.0};
    j["train"]["episodes"] = 30;
    j["selection"]["lime_samples"] = 300;
    j["selection"]["lime_instances"] = 3;
  });

  REQUIRE(run(root, "gen --level -1").code == 0);
  const auto manifest = root / "data" / "level_-1" / "manifest.json";
  REQUIRE(fs::exists(manifest));
  const auto first = testsupport::slurp(manifest);
  CHECK(nlohmann::json::parse(first)["datasets"].size() == 9);
  REQUIRE(run(root, "gen --level -1").code == 0);
  CHECK(testsupport::slurp(manifest) == first);
  CHECK(fs::exists(root / "data" / "purity.csv"));

  const auto missing_models = run(root, "agent-train --level -1");
  CHECK(missing_models.code == 2);
  CHECK(missing_models.err.find("reward-train") != std::string::npos);

  REQUIRE(run(root, "reward-train --level -1").code == 0);
  const auto table = testsupport::slurp(root / "reports" / "reward_models.csv");
  CHECK(line_count(table) == 4);
  CHECK(run(root, "explain 0110").code == 0);
  const auto lime = testsupport::slurp(root / "reports" / "lime_0110.csv");
  CHECK(lime.rfind("feature,weight,mean_abs_weight\n", 0) == 0);
  CHECK(line_count(lime) == 7);
  CHECK(run(root, "explain 1110").code == 2);

  CHECK(run(root, "simulate --level -1 --dataset ND4").code == 2);
  REQUIRE(run(root, "agent-train --level -1").code == 0);
  CHECK(fs::exists(root / "checkpoints" / "agent_-1.ckpt"));
  CHECK(fs::exists(root / "reports" / "training_-1.csv"));

  REQUIRE(run(root, "simulate --level -1 --dataset ND4").code == 0);
  const auto sim = root / "reports" / "simulate";
  CHECK(testsupport::slurp(sim / "-1dB_ND4_filtered.semg").rfind("SEMG1", 0) == 0);
  const auto actions = testsupport::slurp(sim / "-1dB_ND4_actions.csv");
  CHECK(actions.rfind("segment,noise,desired,taken\n", 0) == 0);
  CHECK(line_count(actions) == 65);

  // +5 dB was never trained.
  const auto cmp = run(root, "compare");
  CHECK(cmp.code == 2);
  CHECK(cmp.err.find("agent_5.ckpt") != std::string::npos);
  CHECK(cmp.err.find("level_5") != std::string::npos);
  CHECK(cmp.err.find("agent_-1.ckpt") == std::string::npos);
}
