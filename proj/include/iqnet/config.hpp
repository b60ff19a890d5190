#ifndef IQNET_CONFIG_HPP
#define IQNET_CONFIG_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqnet/cftp.hpp"
#include "iqnet/kernel.hpp"
#include "iqnet/noise.hpp"

namespace iqnet {

enum class ExperimentKind { Mean, Tails, Mgf, Correlation, MaxBox, Ergodic, FrozenStrip, VerifyAll };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Mean: return "mean";
    case ExperimentKind::Tails: return "tails";
    case ExperimentKind::Mgf: return "mgf";
    case ExperimentKind::Correlation: return "correlation";
    case ExperimentKind::MaxBox: return "maxbox";
    case ExperimentKind::Ergodic: return "ergodic";
    case ExperimentKind::FrozenStrip: return "frozen-strip";
    case ExperimentKind::VerifyAll: return "verify-all";
  }
  return "?";
}

inline ExperimentKind experiment_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::Mean, ExperimentKind::Tails, ExperimentKind::Mgf, ExperimentKind::Correlation,
                 ExperimentKind::MaxBox, ExperimentKind::Ergodic, ExperimentKind::FrozenStrip,
                 ExperimentKind::VerifyAll})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::ValidationError, "experiment: unknown kind '" + s + "'");
}

struct ExperimentConfig {
  int dim = 1;
  int n = 1;
  Boundary boundary = Boundary::TorusWrap;
  InterferenceKernel kernel;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double horizon = 10000.0;
  double burn_in = 2000.0;  // default 20% of horizon
  double sample_interval = 1.0;
  std::size_t batch_count = 32;
  CftpOptions cftp;
  std::size_t replicates = 8;
  ExperimentKind experiment = ExperimentKind::Mean;
  std::string output_dir = "out";
  int K = 0;
  int cap = 20;
  std::vector<double> c_grid;  // empty: c_0/4 and c_0/2
  std::vector<int> offsets = {0, 1, 2, 4, 8};
  std::vector<int> box_sizes;  // empty: powers of two in [8, n/2]
  std::vector<int> radii;      // empty: powers of two in [1, n/4]
  double slab_width = kDefaultSlabWidth;
  bool dump_pi = false;

  /// Non-fatal findings from validation (e.g. an unstable arrival rate).
  std::vector<std::string> warnings;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.dim == b.dim && a.n == b.n && a.boundary == b.boundary && a.kernel == b.kernel &&
           a.lambda == b.lambda && a.seed == b.seed && a.horizon == b.horizon && a.burn_in == b.burn_in &&
           a.sample_interval == b.sample_interval && a.batch_count == b.batch_count && a.cftp == b.cftp &&
           a.replicates == b.replicates && a.experiment == b.experiment && a.output_dir == b.output_dir &&
           a.K == b.K && a.cap == b.cap && a.c_grid == b.c_grid && a.offsets == b.offsets &&
           a.box_sizes == b.box_sizes && a.radii == b.radii && a.slab_width == b.slab_width && a.dump_pi == b.dump_pi;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw Error(ErrorCode::ValidationError, path + it.key() + ": unknown key");
}

template <typename T>
T field(const nlohmann::json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, path + key + ": " + e.what());
  }
}

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ValidationError, path + ": " + what);
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::field;
  using detail::require;
  if (!j.is_object()) throw Error(ErrorCode::ValidationError, "config: expected a JSON object");
  detail::reject_unknown(j,
                         {"dim", "n", "boundary", "kernel", "lambda", "seed", "horizon", "burn_in", "sample_interval",
                          "batch_count", "cftp", "replicates", "experiment", "output_dir", "K", "cap", "c_grid",
                          "offsets", "box_sizes", "radii", "slab_width", "dump_pi"},
                         "");
  ExperimentConfig c;
  for (const char* k : {"dim", "n", "kernel", "lambda", "experiment"})
    require(j.contains(k), k, "required key missing");
  c.dim = field<int>(j, "dim", "", 1);
  require(c.dim >= 1, "dim", "must be >= 1");
  c.n = field<int>(j, "n", "", 1);
  require(c.n >= 1, "n", "must be >= 1");
  try {
    c.boundary = boundary_from_string(field<std::string>(j, "boundary", "", "torus"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, std::string("boundary: ") + e.what());
  }
  try {
    c.kernel = kernel_from_json(j.at("kernel"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, std::string("kernel: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("kernel: ") + e.what());
  }
  require(c.kernel.dim() == c.dim, "kernel.dim", "must equal dim");
  c.lambda = field<double>(j, "lambda", "", 0.0);
  require(c.lambda >= 0.0, "lambda", "must be >= 0");
  if (c.lambda * c.kernel.sum() >= 1.0)
    c.warnings.push_back("lambda >= 1/sum(a): unstable regime, no stationary law expected");
  if (j.contains("seed")) {
    c.seed = field<std::uint64_t>(j, "seed", "", 0);
  } else {
    c.seed = seed_from_env().value_or(0);
  }
  c.horizon = field<double>(j, "horizon", "", 10000.0);
  require(c.horizon > 0.0, "horizon", "must be > 0");
  c.burn_in = field<double>(j, "burn_in", "", 0.2 * c.horizon);
  require(c.burn_in >= 0.0 && c.burn_in < c.horizon, "burn_in", "must lie in [0, horizon)");
  c.sample_interval = field<double>(j, "sample_interval", "", 1.0);
  require(c.sample_interval > 0.0, "sample_interval", "must be > 0");
  c.batch_count = field<std::size_t>(j, "batch_count", "", 32);
  require(c.batch_count >= 2, "batch_count", "must be >= 2");
  if (j.contains("cftp")) {
    const auto& cf = j.at("cftp");
    require(cf.is_object(), "cftp", "must be an object");
    detail::reject_unknown(cf, {"T0", "m", "T_max"}, "cftp.");
    c.cftp.T0 = field<double>(cf, "T0", "cftp.", 64.0);
    require(c.cftp.T0 > 0.0, "cftp.T0", "must be > 0");
    c.cftp.consecutive_required = field<int>(cf, "m", "cftp.", 2);
    require(c.cftp.consecutive_required >= 2, "cftp.m", "must be >= 2");
    c.cftp.T_max = field<double>(cf, "T_max", "cftp.", 65536.0);
    require(c.cftp.T_max >= c.cftp.T0, "cftp.T_max", "must be >= T0");
  }
  c.replicates = field<std::size_t>(j, "replicates", "", 8);
  require(c.replicates >= 1, "replicates", "must be >= 1");
  c.experiment = experiment_from_string(field<std::string>(j, "experiment", "", "mean"));
  c.output_dir = field<std::string>(j, "output_dir", "", "out");
  c.K = field<int>(j, "K", "", 0);
  require(c.K >= 0, "K", "must be >= 0");
  c.cap = field<int>(j, "cap", "", 20);
  require(c.cap >= 1, "cap", "must be >= 1");
  c.c_grid = field<std::vector<double>>(j, "c_grid", "", {});
  c.offsets = field<std::vector<int>>(j, "offsets", "", {0, 1, 2, 4, 8});
  c.box_sizes = field<std::vector<int>>(j, "box_sizes", "", {});
  c.radii = field<std::vector<int>>(j, "radii", "", {});
  c.slab_width = field<double>(j, "slab_width", "", kDefaultSlabWidth);
  require(c.slab_width > 0.0, "slab_width", "must be > 0");
  c.cftp.slab_width = c.slab_width;
  c.dump_pi = field<bool>(j, "dump_pi", "", false);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"dim", c.dim},
          {"n", c.n},
          {"boundary", to_string(c.boundary)},
          {"kernel", kernel_to_json(c.kernel)},
          {"lambda", c.lambda},
          {"seed", c.seed},
          {"horizon", c.horizon},
          {"burn_in", c.burn_in},
          {"sample_interval", c.sample_interval},
          {"batch_count", c.batch_count},
          {"cftp",
           {{"T0", c.cftp.T0}, {"m", c.cftp.consecutive_required}, {"T_max", c.cftp.T_max}}},
          {"replicates", c.replicates},
          {"experiment", to_string(c.experiment)},
          {"output_dir", c.output_dir},
          {"K", c.K},
          {"cap", c.cap},
          {"c_grid", c.c_grid},
          {"offsets", c.offsets},
          {"box_sizes", c.box_sizes},
          {"radii", c.radii},
          {"slab_width", c.slab_width},
          {"dump_pi", c.dump_pi}};
}

}  // namespace iqnet

#endif  // IQNET_CONFIG_HPP
