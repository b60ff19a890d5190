#ifndef IQNET_CFTP_HPP
#define IQNET_CFTP_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqnet/dynamics.hpp"

namespace iqnet {

struct CftpOptions {
  double T0 = 64.0;
  int consecutive_required = 2;
  double T_max = 65536.0;
  double slab_width = kDefaultSlabWidth;
  friend bool operator==(const CftpOptions&, const CftpOptions&) = default;
};

struct CftpTraceEntry {
  double T;
  std::vector<int> window_values;
};

struct CftpResult {
  QueueField sample;
  /// Smallest start time -T in the trace from which the observed window
  /// already had its final value.
  double T_final = 0.0;
  /// Largest T actually simulated.
  double T_run = 0.0;
  bool stabilized = false;
  std::vector<CftpTraceEntry> trace;
  std::string bias_note;
  std::string warning;
};

/// Window values of `f` at the given site indices.
inline std::vector<int> window_values(const QueueField& f, const std::vector<std::size_t>& window) {
  std::vector<int> v;
  v.reserve(window.size());
  for (std::size_t i : window) v.push_back(f.values[i]);
  return v;
}

/// Runs the dynamics from all-empty at -T up to 0 for T = T0, 2 T0, 4 T0, ...
/// on one fixed noise realization, until the observed window is unchanged for
/// `consecutive_required` successive doublings or T would exceed T_max.
///
/// This is a monotone limit from below, not a sandwiched perfect sampler; the
/// stopping rule is a heuristic and `stabilized == false` flags possible bias.
inline CftpResult cftp_sample(const Domain& dom, const InterferenceKernel& k, double lambda,
                              const std::vector<std::size_t>& observe_window, std::uint64_t seed,
                              const CftpOptions& opt = {}) {
  for (std::size_t i : observe_window)
    if (i >= dom.site_count()) throw Error(ErrorCode::InvalidWindow, "observation window outside domain");
  if (!(opt.T0 > 0.0)) throw Error(ErrorCode::ValidationError, "T0 must be positive");
  if (opt.consecutive_required < 2) throw Error(ErrorCode::ValidationError, "consecutive_required must be >= 2");

  CftpResult res;
  if (lambda * k.sum() >= 1.0) res.warning = "arrival rate at or above 1/sum(a): no stationary regime expected";
  const InteractionTable table(dom, k);
  SimulationOptions sim;
  sim.slab_width = opt.slab_width;

  int unchanged = 0;
  for (double T = opt.T0; T <= opt.T_max; T *= 2.0) {
    QueueField f = QueueField::empty(dom, -T);
    simulate_observed(dom, table, lambda, f, -T, 0.0, seed, {}, [](double, const QueueField&) {}, sim);
    std::vector<int> w = window_values(f, observe_window);
    if (!res.trace.empty() && res.trace.back().window_values == w) ++unchanged;
    else unchanged = 0;
    res.trace.push_back({T, std::move(w)});
    res.sample = std::move(f);
    res.T_run = T;
    if (unchanged >= opt.consecutive_required) {
      res.stabilized = true;
      break;
    }
  }
  std::size_t first = res.trace.size() - 1;
  while (first > 0 && res.trace[first - 1].window_values == res.trace.back().window_values) --first;
  res.T_final = res.trace[first].T;
  if (!res.stabilized) res.bias_note = "T_max reached before the observed window stabilized; sample may be biased low";
  return res;
}

/// True when every window value is nondecreasing along the doubling trace.
inline bool trace_is_monotone(const CftpResult& r) {
  for (std::size_t s = 1; s < r.trace.size(); ++s)
    for (std::size_t i = 0; i < r.trace[s].window_values.size(); ++i)
      if (r.trace[s].window_values[i] < r.trace[s - 1].window_values[i]) return false;
  return true;
}

/// Checks that the noise over [-2T, 0) restricted to [-T, 0) is the noise over
/// [-T, 0), and that an all-empty start at -T gives the same field at 0 either
/// way.
inline bool restriction_consistent(const Domain& dom, const InterferenceKernel& k, double lambda, double T,
                                   std::uint64_t seed, double slab_width = kDefaultSlabWidth) {
  const auto wide = merged_event_stream(dom, seed, lambda, -2.0 * T, 0.0, slab_width);
  const auto narrow = merged_event_stream(dom, seed, lambda, -T, 0.0, slab_width);
  std::vector<Event> restricted;
  for (const auto& e : wide)
    if (e.time >= -T) restricted.push_back(e);
  if (restricted != narrow) return false;

  const InteractionTable table(dom, k);
  QueueField a = QueueField::empty(dom, -T);
  for (const auto& e : restricted) apply_event(a, dom, table, e);
  QueueField b = QueueField::empty(dom, -T);
  SimulationOptions sim;
  sim.slab_width = slab_width;
  simulate_observed(dom, table, lambda, b, -T, 0.0, seed, {}, [](double, const QueueField&) {}, sim);
  return a.values == b.values;
}

inline nlohmann::json cftp_to_json(const CftpResult& r) {
  return {{"sample", r.sample.values}, {"T_final", r.T_final}, {"stabilized", r.stabilized}};
}

}  // namespace iqnet

#endif  // IQNET_CFTP_HPP
