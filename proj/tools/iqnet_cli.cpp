// Command-line driver: simulate, cftp, oracle, verify, experiment.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "iqnet/iqnet.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> replicas;
  bool quiet = false;
};

iqnet::ExperimentConfig load(const Common& c) {
  std::ifstream in(c.config_path);
  if (!in) throw iqnet::Error(iqnet::ErrorCode::IoError, "cannot read config " + c.config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = iqnet::parse_config(ss.str());
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output_dir = *c.out;
  if (c.replicas) cfg.replicates = *c.replicas;
  if (!c.quiet)
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  return cfg;
}

void add_flags(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  app->add_option("--seed", c.seed, "base seed (overrides config and IQNET_SEED)");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--replicas", c.replicas, "replicate count");
  app->add_flag("--quiet", c.quiet, "suppress progress output");
}

std::ofstream open_in(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(std::filesystem::path(dir) / name);
  if (!os) throw iqnet::Error(iqnet::ErrorCode::IoError, "cannot write " + dir + "/" + name);
  return os;
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  const auto dom = iqnet::make_domain(cfg);
  const auto times = iqnet::sample_grid(0.0, cfg.horizon, cfg.sample_interval);
  iqnet::SimulationOptions opt;
  opt.slab_width = cfg.slab_width;
  const auto traj = iqnet::simulate(dom, cfg.kernel, cfg.lambda, iqnet::QueueField::empty(dom), 0.0, cfg.horizon,
                                    cfg.seed, times, opt);
  auto os = open_in(cfg.output_dir, "trajectory.csv");
  iqnet::write_trajectory_csv(os, dom, traj);
  if (!c.quiet) std::cerr << traj.event_count << " events, " << traj.times.size() << " samples\n";
  return 0;
}

int cmd_cftp(const Common& c) {
  const auto cfg = load(c);
  const auto dom = iqnet::make_domain(cfg);
  auto opt = cfg.cftp;
  opt.slab_width = cfg.slab_width;
  const auto runs =
      iqnet::cftp_replicates(dom, cfg.kernel, cfg.lambda, iqnet::all_sites(dom), cfg.seed, cfg.replicates, opt);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto j = iqnet::cftp_to_json(runs[r]);
    j["replicate"] = r;
    j["T_run"] = runs[r].T_run;
    if (!runs[r].warning.empty()) j["warning"] = runs[r].warning;
    std::cout << j.dump() << '\n';
  }
  return 0;
}

int cmd_oracle(const Common& c) {
  const auto cfg = load(c);
  const auto dom = iqnet::make_domain(cfg);
  const auto res = iqnet::solve_oracle(dom, cfg.kernel, cfg.lambda, cfg.cap, {5, iqnet::resolve_c_grid(cfg)});
  std::cout << iqnet::oracle_to_json(res).dump(2) << '\n';
  if (cfg.dump_pi) {
    auto os = open_in(cfg.output_dir, "pi.csv");
    iqnet::write_pi_csv(os, iqnet::CappedStateSpace(dom, cfg.cap), res.pi);
  }
  return 0;
}

int cmd_verify(const Common& c) {
  std::uint64_t seed = c.seed.value_or(iqnet::seed_from_env().value_or(0));
  if (!c.config_path.empty() && !c.seed) seed = load(c).seed;
  const auto reports = iqnet::run_verify_suite(seed);
  nlohmann::json arr = nlohmann::json::array();
  bool ok = true;
  for (const auto& r : reports) {
    arr.push_back(iqnet::report_to_json(r));
    ok = ok && r.pass;
  }
  std::cout << arr.dump(2) << '\n';
  return ok ? 0 : 1;
}

int cmd_experiment(const Common& c) {
  const auto cfg = load(c);
  return iqnet::run_experiment(cfg, c.quiet ? nullptr : &std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iqnet: interference queueing network simulator"};
  app.require_subcommand(1);
  Common c;
  auto* sim = app.add_subcommand("simulate", "forward simulation from all-empty; writes trajectory.csv");
  auto* cftp = app.add_subcommand("cftp", "stationary samples from the past; JSON lines on stdout");
  auto* oracle = app.add_subcommand("oracle", "exact stationary law of a small capped system");
  auto* verify = app.add_subcommand("verify", "run the self-check suite");
  auto* exp = app.add_subcommand("experiment", "run a configured experiment; writes summary.json and metrics.csv");
  for (auto* s : {sim, cftp, oracle, exp}) add_flags(s, c, true);
  add_flags(verify, c, false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (sim->parsed()) return cmd_simulate(c);
    if (cftp->parsed()) return cmd_cftp(c);
    if (oracle->parsed()) return cmd_oracle(c);
    if (verify->parsed()) return cmd_verify(c);
    return cmd_experiment(c);
  } catch (const iqnet::Error& e) {
    std::cerr << "error [" << iqnet::to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
