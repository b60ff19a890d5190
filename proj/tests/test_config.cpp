#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "iqnet/runner.hpp"

using namespace iqnet;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({"dim": 1, "n": 16, "kernel": {"dim": 1, "entries": [[-1, 0.5], [0, 1], [1, 0.5]]},
                           "lambda": 0.2, "experiment": "mean"})";

nlohmann::json minimal() { return nlohmann::json::parse(kMinimal); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("iqnet_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json without_timestamp(const fs::path& p) {
  auto j = nlohmann::json::parse(slurp(p));
  j.erase("timestamp");
  return j;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(IQNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ExperimentConfig small_mean(const fs::path& out, double lambda) {
  auto j = minimal();
  j["n"] = 4;
  j["lambda"] = lambda;
  j["horizon"] = 2000;
  j["replicates"] = 2;
  j["seed"] = 5;
  j["output_dir"] = out.string();
  return config_from_json(j);
}

}  // namespace

TEST(ParseConfig, DefaultsApplied) {
  ::unsetenv("IQNET_SEED");
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.replicates, 8u);
  EXPECT_EQ(c.boundary, Boundary::TorusWrap);
  EXPECT_DOUBLE_EQ(c.burn_in, 0.2 * c.horizon);
  EXPECT_TRUE(c.warnings.empty());
  ::setenv("IQNET_SEED", "41", 1);
  EXPECT_EQ(parse_config(kMinimal).seed, 41u);
  ::unsetenv("IQNET_SEED");
}

TEST(ParseConfig, UnstableRateWarns) {
  auto j = minimal();
  j["lambda"] = 0.5;
  const auto c = config_from_json(j);
  ASSERT_EQ(c.warnings.size(), 1u);
}

TEST(ParseConfig, UnknownKeyNamed) {
  auto j = minimal();
  j["lamda"] = 0.2;
  try {
    config_from_json(j);
    FAIL() << "accepted unknown key";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationError);
    EXPECT_NE(std::string(e.what()).find("lamda"), std::string::npos);
  }
  auto k = minimal();
  k["cftp"] = {{"T00", 3}};
  EXPECT_THROW(config_from_json(k), Error);
}

TEST(ParseConfig, Errors) {
  try {
    parse_config("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  auto j = minimal();
  j.erase("lambda");
  EXPECT_THROW(config_from_json(j), Error);
  j = minimal();
  j["experiment"] = "nope";
  EXPECT_THROW(config_from_json(j), Error);
  j = minimal();
  j["kernel"]["entries"] = {{0, 1}, {1, 0.5}};
  EXPECT_THROW(config_from_json(j), Error);
  j = minimal();
  j["n"] = 0;
  EXPECT_THROW(config_from_json(j), Error);
}

TEST(ParseConfig, RoundTrip) {
  auto j = minimal();
  j["boundary"] = "zero_box";
  j["c_grid"] = {0.01, 0.05};
  j["cftp"] = {{"T0", 8}, {"m", 3}, {"T_max", 512}};
  j["experiment"] = "frozen-strip";
  j["seed"] = 1234567890123ULL;
  const auto c = config_from_json(j);
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  const auto d = parse_config(kMinimal);
  EXPECT_EQ(parse_config(config_to_json(d).dump()), d);
  for (auto kind : {ExperimentKind::Mean, ExperimentKind::Tails, ExperimentKind::Mgf, ExperimentKind::Correlation,
                    ExperimentKind::MaxBox, ExperimentKind::Ergodic, ExperimentKind::FrozenStrip,
                    ExperimentKind::VerifyAll})
    EXPECT_EQ(experiment_from_string(to_string(kind)), kind);
}

TEST(RunExperiment, ZeroRateMeanExactlyZero) {
  const auto out = scratch("zero");
  const auto cfg = small_mean(out, 0.0);
  EXPECT_EQ(run_experiment(cfg), 0);
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  bool seen = false;
  for (const auto& m : j.at("metrics"))
    if (m.at("metric") == "mean") {
      EXPECT_EQ(m.at("value").get<double>(), 0.0);
      seen = true;
    }
  EXPECT_TRUE(seen);
}

TEST(RunExperiment, DeterministicExceptTimestamp) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = small_mean(a, 0.2), cb = small_mean(b, 0.2);
  EXPECT_EQ(run_experiment(ca), 0);
  EXPECT_EQ(run_experiment(cb), 0);
  auto ja = without_timestamp(a / "summary.json"), jb = without_timestamp(b / "summary.json");
  ja["config"].erase("output_dir");
  jb["config"].erase("output_dir");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(RunExperiment, CsvReproducesSummary) {
  const auto out = scratch("csv");
  auto cfg = small_mean(out, 0.3);
  cfg.experiment = ExperimentKind::Mgf;
  ASSERT_EQ(run_experiment(cfg), 0);
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  std::ifstream csv(out / "metrics.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "metric,key,value,stderr");
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string metric, key, value, se;
    std::getline(ss, metric, ',');
    std::getline(ss, key, ',');
    std::getline(ss, value, ',');
    std::getline(ss, se, ',');
    const auto& m = j.at("metrics").at(row++);
    EXPECT_EQ(m.at("metric").get<std::string>(), metric);
    EXPECT_EQ(m.at("key").get<std::string>(), key);
    EXPECT_EQ(m.at("value").get<double>(), std::strtod(value.c_str(), nullptr));
    EXPECT_EQ(m.at("stderr").get<double>(), std::strtod(se.c_str(), nullptr));
  }
  EXPECT_EQ(row, j.at("metrics").size());
  EXPECT_EQ(j.at("checks").size(), 2u);
}

TEST(RunExperiment, VerifyAllOnCanonicalFixture) {
  const auto out = scratch("verify");
  auto j = minimal();
  j["n"] = 1;
  j["experiment"] = "verify-all";
  j["output_dir"] = out.string();
  EXPECT_EQ(run_experiment(config_from_json(j)), 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(out / "summary.json")).at("all_pass").get<bool>());
}

TEST(RunExperiment, StationaryFieldPipelines) {
  const auto out = scratch("fields");
  auto j = minimal();
  j["n"] = 32;
  j["replicates"] = 10;
  j["cftp"] = {{"T0", 16}, {"m", 2}, {"T_max", 4096}};
  j["output_dir"] = out.string();
  for (const char* kind : {"correlation", "maxbox", "ergodic"}) {
    j["experiment"] = kind;
    EXPECT_EQ(run_experiment(config_from_json(j)), 0) << kind;
    const auto s = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_FALSE(s.at("metrics").empty()) << kind;
  }
}

TEST(RunExperiment, TailsAndFrozenStrip) {
  const auto out = scratch("tails");
  auto j = minimal();
  j["n"] = 8;
  j["lambda"] = 0.35;
  j["horizon"] = 5000;
  j["output_dir"] = out.string();
  j["experiment"] = "tails";
  EXPECT_EQ(run_experiment(config_from_json(j)), 0);
  j["n"] = 64;
  j["lambda"] = 0.2;
  j["replicates"] = 40;
  j["experiment"] = "frozen-strip";
  EXPECT_EQ(run_experiment(config_from_json(j)), 0);
  const auto s = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(s.at("checks").size(), 3u);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  auto j = minimal();
  j["n"] = 2;
  j["horizon"] = 500;
  j["replicates"] = 2;
  j["cap"] = 4;
  {
    std::ofstream(dir / "ok.json") << j.dump();
    auto bad = j;
    bad["lamda"] = 1;
    std::ofstream(dir / "bad.json") << bad.dump();
    std::ofstream(dir / "garbage.json") << "{";
  }
  const std::string ok = (dir / "ok.json").string();
  EXPECT_EQ(run_cli("experiment --config " + ok + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "summary.json"));
  EXPECT_EQ(run_cli("simulate --config " + ok + " --quiet --out " + (dir / "s").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "s" / "trajectory.csv"));
  EXPECT_EQ(run_cli("cftp --config " + ok + " --replicas 3 --seed 9"), 0);
  EXPECT_EQ(run_cli("experiment --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("experiment --config " + (dir / "garbage.json").string()), 2);
  EXPECT_EQ(run_cli("experiment"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("verify --seed 3"), 0);
}

TEST(Cli, OracleRequiresSmallDomain) {
  const auto dir = scratch("cli_oracle");
  auto j = minimal();
  j["n"] = 1;
  j["cap"] = 10;
  j["dump_pi"] = true;
  j["output_dir"] = (dir / "o").string();
  std::ofstream(dir / "small.json") << j.dump();
  j["n"] = 3;
  std::ofstream(dir / "big.json") << j.dump();
  EXPECT_EQ(run_cli("oracle --config " + (dir / "small.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "pi.csv"));
  EXPECT_EQ(run_cli("oracle --config " + (dir / "big.json").string()), 2);
}

TEST(Cli, CftpSeedFlagDeterministic) {
  const auto dir = scratch("cli_seed");
  auto j = minimal();
  j["n"] = 3;
  j["replicates"] = 2;
  std::ofstream(dir / "c.json") << j.dump();
  const std::string base = std::string(IQNET_CLI_PATH) + " cftp --config " + (dir / "c.json").string();
  ASSERT_EQ(std::system((base + " --seed 4 > " + (dir / "a").string()).c_str()), 0);
  ASSERT_EQ(std::system((base + " --seed 4 > " + (dir / "b").string()).c_str()), 0);
  ASSERT_EQ(std::system((base + " --seed 5 > " + (dir / "c").string()).c_str()), 0);
  EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
  EXPECT_NE(slurp(dir / "a"), slurp(dir / "c"));
  const std::string lines = slurp(dir / "a");
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 2);
}
