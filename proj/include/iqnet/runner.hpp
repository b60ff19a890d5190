#ifndef IQNET_RUNNER_HPP
#define IQNET_RUNNER_HPP

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqnet/config.hpp"
#include "iqnet/suite.hpp"

namespace iqnet {

/// One row of metrics.csv; `key` distinguishes entries of a family (x, c, N, ...).
struct Metric {
  std::string metric;
  std::string key;
  double value = 0.0;
  double stderr_value = 0.0;
};

struct ExperimentOutcome {
  std::vector<Metric> metrics;
  std::vector<CheckReport> checks;
  nlohmann::json extra = nlohmann::json::object();
  bool checks_gate_exit = false;  // verify-all: any failed check -> exit 1

  void add(std::string metric, std::string key, double value, double se = 0.0) {
    metrics.push_back({std::move(metric), std::move(key), value, se});
  }
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline Domain make_domain(const ExperimentConfig& cfg) {
  switch (cfg.boundary) {
    case Boundary::TorusWrap: return Domain::torus(cfg.dim, cfg.n);
    case Boundary::ZeroBox: return Domain::zero_box(cfg.dim, cfg.n);
    case Boundary::FrozenStrip: return Domain::frozen_strip(cfg.dim, cfg.n, FrozenStripSchedule{}(cfg.n));
  }
  throw Error(ErrorCode::InvalidDomain, "unknown boundary");
}

/// Configured MGF grid, or {c_0/4, c_0/2} when unset and the rate is stable.
inline std::vector<double> resolve_c_grid(const ExperimentConfig& cfg) {
  if (!cfg.c_grid.empty()) return cfg.c_grid;
  if (cfg.lambda * cfg.kernel.sum() >= 1.0) return {};
  const auto b = compute_constants(cfg.lambda, cfg.kernel.sum());
  return {b.c0 / 4.0, b.c0 / 2.0};
}

inline std::string key_of(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline bool stable(const ExperimentConfig& cfg) { return cfg.lambda * cfg.kernel.sum() < 1.0; }

inline StationaryEstimate forward(const ExperimentConfig& cfg, const Domain& dom, const std::vector<double>& c_grid) {
  return forward_stationary_estimate(dom, cfg.kernel, cfg.lambda, cfg.horizon, cfg.burn_in, cfg.sample_interval,
                                     cfg.batch_count, c_grid, cfg.seed, cfg.replicates, cfg.slab_width);
}

inline void add_common(ExperimentOutcome& out, const StationaryEstimate& est) {
  out.add("mean", "", est.mean, est.mean_se);
  for (std::size_t k = 0; k < est.moments.size(); ++k)
    out.add("moment", std::to_string(k), est.moments[k], est.moments_se[k]);
  out.add("sample_count", "", static_cast<double>(est.sample_count));
}

inline std::vector<int> default_powers(int lo, int hi) {
  std::vector<int> v;
  for (int N = lo; N <= hi; N *= 2) v.push_back(N);
  return v;
}

inline void run_mean(const ExperimentConfig& cfg, const Domain& dom, ExperimentOutcome& out) {
  const auto est = forward(cfg, dom, {});
  add_common(out, est);
  if (stable(cfg)) {
    const double target = stationary_mean_target(cfg.lambda, cfg.kernel.sum());
    out.add("mean_target", "", target);
    out.add("mean_gap", "", est.mean - target, est.mean_se);
    out.checks.push_back(check_mean_formula(est.mean, est.mean_se, cfg.lambda, cfg.kernel.sum()));
  }
}

inline void run_tails(const ExperimentConfig& cfg, const Domain& dom, ExperimentOutcome& out) {
  const auto est = forward(cfg, dom, {});
  add_common(out, est);
  for (std::size_t x = 0; x < est.ccdf.size(); ++x) out.add("ccdf", std::to_string(x), est.ccdf[x], est.ccdf_se[x]);
  const double n = static_cast<double>(est.sample_count);
  try {
    const auto fit = fit_tail(est.ccdf, n, default_tail_xmin(est.ccdf), cfg.lambda);
    out.add("tail_c2", "", fit.c2);
    out.add("tail_intercept", "", fit.intercept);
    out.add("tail_residual", "", fit.residual);
    out.extra["tail_fit"] = {{"x_lo", fit.x_lo}, {"x_hi", fit.x_hi}, {"exponential_like", fit.exponential_like},
                             {"lower_witness_holds", fit.lower_witness_holds}};
  } catch (const Error& e) {
    out.extra["tail_fit"] = {{"error", e.what()}};
  }
  if (stable(cfg)) {
    const auto b = compute_constants(cfg.lambda, cfg.kernel.sum());
    out.checks.push_back(tail_sandwich_check(est.ccdf, est.ccdf_se, b, b.c0 / 2, 0, reliable_ccdf_end(est.ccdf, n)));
  }
}

inline void run_mgf(const ExperimentConfig& cfg, const Domain& dom, ExperimentOutcome& out) {
  const auto grid = resolve_c_grid(cfg);
  const auto est = forward(cfg, dom, grid);
  add_common(out, est);
  const bool st = stable(cfg);
  const BoundConstants b = st ? compute_constants(cfg.lambda, cfg.kernel.sum()) : BoundConstants{};
  if (st) {
    out.add("D", "", b.D);
    out.add("c0", "", b.c0);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.add("mgf", key_of(grid[i]), est.mgf[i], est.mgf_se[i]);
    if (st && grid[i] < b.c0) {
      out.add("mgf_bound", key_of(grid[i]), b.mgf_bound(grid[i]));
      out.checks.push_back(check_mgf_bound(est.mgf[i], grid[i], b, 3.0 * est.mgf_se[i]));
    }
  }
}

inline std::vector<QueueField> stationary_fields(const ExperimentConfig& cfg, const Domain& dom, std::size_t count,
                                                 ExperimentOutcome& out) {
  auto opt = cfg.cftp;
  opt.slab_width = cfg.slab_width;
  const auto runs = cftp_replicates(dom, cfg.kernel, cfg.lambda, all_sites(dom), cfg.seed, count, opt);
  std::vector<QueueField> fields;
  std::size_t stabilized = 0;
  double tmax = 0.0;
  for (const auto& r : runs) {
    stabilized += r.stabilized ? 1 : 0;
    tmax = std::max(tmax, r.T_final);
    fields.push_back(r.sample);
  }
  out.add("cftp_stabilized", "", static_cast<double>(stabilized));
  out.add("cftp_T_final_max", "", tmax);
  return fields;
}

inline void run_correlation(const ExperimentConfig& cfg, const Domain& dom, ExperimentOutcome& out) {
  const auto fields = stationary_fields(cfg, dom, cfg.replicates, out);
  const auto prof = spatial_covariance(fields, dom, 0, cfg.offsets);
  out.add("mean", "", prof.mean, prof.mean_se);
  for (std::size_t i = 0; i < prof.offsets.size(); ++i) {
    const auto key = std::to_string(prof.offsets[i]);
    out.add("covariance", key, prof.covariance[i], prof.covariance_se[i]);
    out.add("product", key, prof.product[i], prof.product_se[i]);
  }
  if (stable(cfg)) {
    const double m = stationary_mean_target(cfg.lambda, cfg.kernel.sum());
    out.add("product_limit", "", m * m);
  }
}

inline void run_maxbox(const ExperimentConfig& cfg, const Domain& dom, ExperimentOutcome& out) {
  const auto fields = stationary_fields(cfg, dom, 1, out);
  const auto Ns = cfg.box_sizes.empty() ? default_powers(8, cfg.n / 2) : cfg.box_sizes;
  const auto rep = max_in_boxes(fields.front(), dom, Ns);
  for (std::size_t i = 0; i < rep.N.size(); ++i) out.add("max", std::to_string(rep.N[i]), rep.maxima[i]);
  out.add("slope", "", rep.slope);
  out.add("intercept", "", rep.intercept);
  out.add("C1", "", rep.C1);
  out.add("C2", "", rep.C2);
  out.extra["nondecreasing"] = rep.nondecreasing;
}

inline void run_ergodic(const ExperimentConfig& cfg, const Domain& dom, ExperimentOutcome& out) {
  const auto fields = stationary_fields(cfg, dom, 1, out);
  const auto radii = cfg.radii.empty() ? default_powers(1, cfg.n / 4) : cfg.radii;
  const auto id = ergodic_average(fields.front(), dom, radii, [](const TranslatedField& t) { return t.value(); });
  const auto ind =
      ergodic_average(fields.front(), dom, radii, [](const TranslatedField& t) { return t.value() >= 1 ? 1.0 : 0.0; });
  for (const auto& r : id) out.add("average_identity", std::to_string(r.radius), r.average, r.se);
  for (const auto& r : ind) out.add("average_indicator", std::to_string(r.radius), r.average, r.se);
}

inline void run_frozen(const ExperimentConfig& cfg, ExperimentOutcome& out) {
  FrozenStripOptions opt;
  opt.K = cfg.K;
  opt.replicates = cfg.replicates;
  opt.cftp = cfg.cftp;
  opt.cftp.slab_width = cfg.slab_width;
  const auto rep = frozen_strip_experiment(cfg.n, FrozenStripSchedule{}, cfg.kernel, cfg.lambda, cfg.seed, opt);
  out.add("L_n", "", rep.L_n);
  out.add("correlation", "", rep.correlation_estimate, rep.correlation_se);
  out.add("pooled_tv", "", rep.pooled_tv);
  out.add("pair_tv", "", rep.pair_tv);
  out.add("cftp_stabilized", "", static_cast<double>(rep.stabilized_runs));
  out.checks = {rep.structural, rep.correlation, rep.marginal};
}

}  // namespace detail

/// Runs the configured pipeline without touching the filesystem.
inline ExperimentOutcome compute_experiment(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  if (cfg.experiment == ExperimentKind::VerifyAll) {
    out.checks = run_verify_suite(cfg.seed);
    out.checks_gate_exit = true;
    return out;
  }
  if (cfg.experiment == ExperimentKind::FrozenStrip) {
    detail::run_frozen(cfg, out);
    return out;
  }
  const Domain dom = make_domain(cfg);
  switch (cfg.experiment) {
    case ExperimentKind::Mean: detail::run_mean(cfg, dom, out); break;
    case ExperimentKind::Tails: detail::run_tails(cfg, dom, out); break;
    case ExperimentKind::Mgf: detail::run_mgf(cfg, dom, out); break;
    case ExperimentKind::Correlation: detail::run_correlation(cfg, dom, out); break;
    case ExperimentKind::MaxBox: detail::run_maxbox(cfg, dom, out); break;
    case ExperimentKind::Ergodic: detail::run_ergodic(cfg, dom, out); break;
    default: break;
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const ExperimentOutcome& out) {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& x : out.metrics)
    m.push_back({{"metric", x.metric}, {"key", x.key}, {"value", x.value}, {"stderr", x.stderr_value}});
  nlohmann::json c = nlohmann::json::array();
  for (const auto& r : out.checks) c.push_back(report_to_json(r));
  return {{"config", config_to_json(cfg)}, {"experiment", to_string(cfg.experiment)}, {"metrics", m},
          {"checks", c}, {"extra", out.extra}, {"warnings", cfg.warnings}, {"all_pass", out.all_pass()},
          {"timestamp", utc_timestamp()}};
}

/// Long-format CSV: metric,key,value,stderr.
inline void write_metrics_csv(std::ostream& os, const std::vector<Metric>& metrics) {
  os << "metric,key,value,stderr\n";
  char buf[64];
  for (const auto& m : metrics) {
    os << m.metric << ',' << m.key << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", m.value, m.stderr_value);
    os << buf;
  }
}

inline void write_outcome(const ExperimentConfig& cfg, const ExperimentOutcome& out, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  std::ofstream js(std::filesystem::path(dir) / "summary.json");
  std::ofstream csv(std::filesystem::path(dir) / "metrics.csv");
  if (!js || !csv) throw Error(ErrorCode::IoError, "cannot write into " + dir);
  js << summary_json(cfg, out).dump(2) << '\n';
  write_metrics_csv(csv, out.metrics);
  if (!js || !csv) throw Error(ErrorCode::IoError, "write failed in " + dir);
}

/// Computes, writes summary.json and metrics.csv under cfg.output_dir, and
/// returns the process exit status (1 when verify-all has a failed check).
inline int run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  const auto out = compute_experiment(cfg);
  write_outcome(cfg, out, cfg.output_dir);
  if (log) {
    for (const auto& w : cfg.warnings) *log << "warning: " << w << '\n';
    for (const auto& c : out.checks) *log << (c.pass ? "PASS " : "FAIL ") << c.name << " slack=" << c.slack << '\n';
  }
  return out.checks_gate_exit && !out.all_pass() ? 1 : 0;
}

}  // namespace iqnet

#endif  // IQNET_RUNNER_HPP
