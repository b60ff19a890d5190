#ifndef IQNET_DYNAMICS_HPP
#define IQNET_DYNAMICS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "iqnet/error.hpp"
#include "iqnet/kernel.hpp"
#include "iqnet/lattice.hpp"
#include "iqnet/noise.hpp"

namespace iqnet {

/// Queue lengths over the sites of a Domain (in Domain index order).
struct QueueField {
  std::vector<int> values;
  double time = 0.0;

  static QueueField empty(const Domain& dom, double t = 0.0) { return {std::vector<int>(dom.site_count(), 0), t}; }

  friend bool operator==(const QueueField&, const QueueField&) = default;
};

/// Per-site neighbour lists (index, weight) with ZERO-resolved neighbours
/// already dropped. Built once per (domain, kernel); holds no rates.
class InteractionTable {
 public:
  InteractionTable(const Domain& dom, const InterferenceKernel& k) {
    if (k.dim() != dom.dim()) throw Error(ErrorCode::ShapeMismatch, "kernel and domain dimensions differ");
    if (dom.wraps() && k.radius() > dom.half_width())
      throw Error(ErrorCode::InvalidDomain, "torus half width must be at least the kernel radius");
    start_.reserve(dom.site_count() + 1);
    start_.push_back(0);
    for (std::size_t i = 0; i < dom.site_count(); ++i) {
      for (const auto& [off, w] : k.entries()) {
        const std::ptrdiff_t j = dom.resolve(i, off);
        if (j == kZeroSite) continue;
        nbr_.push_back(static_cast<std::uint32_t>(j));
        weight_.push_back(w);
      }
      start_.push_back(nbr_.size());
    }
  }

  std::size_t site_count() const noexcept { return start_.size() - 1; }

  /// Sum_j a_j x_{i-j} with the kernel's entry order fixed.
  double interference(std::span<const int> x, std::size_t i) const {
    double s = 0.0;
    for (std::size_t p = start_[i]; p < start_[i + 1]; ++p) s += weight_[p] * x[nbr_[p]];
    return s;
  }

  template <typename F>
  void for_each_neighbor(std::size_t i, F&& f) const {
    for (std::size_t p = start_[i]; p < start_[i + 1]; ++p) f(nbr_[p], weight_[p]);
  }

 private:
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> nbr_;
  std::vector<double> weight_;
};

/// x_i / sum_j a_j x_{i-j}, with 0/0 = 0. Lies in [0, 1] because a_0 = 1.
inline double service_rate(const InteractionTable& table, std::span<const int> x, std::size_t i) {
  if (x[i] == 0) return 0.0;
  return static_cast<double>(x[i]) / table.interference(x, i);
}

inline double service_rate(const Domain& dom, const InterferenceKernel& k, const QueueField& f, const Site& site) {
  return service_rate(InteractionTable(dom, k), f.values, dom.index_of(site));
}

enum class DynamicsKind {
  Interference,
  /// Independent M/M/1 queues driven by the same noise: every potential
  /// departure at a nonempty site is accepted.
  MM1Companion,
};

/// Applies one event in place. Returns true when the field changed.
inline bool apply_event(QueueField& f, const Domain& dom, const InteractionTable& table, const Event& e,
                        DynamicsKind kind = DynamicsKind::Interference) {
  f.time = e.time;
  int& x = f.values[e.site];
  if (e.kind == EventKind::Arrival) {
    if (!dom.arrivals_allowed(e.site)) return false;
    ++x;
    return true;
  }
  if (x == 0) return false;
  if (kind == DynamicsKind::MM1Companion) {
    --x;
    return true;
  }
  const double r = service_rate(table, f.values, e.site);
  if (r < 0.0 || r > 1.0) throw std::logic_error("service rate outside [0, 1]");
  if (e.mark <= r) {
    --x;
    return true;
  }
  return false;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<QueueField> snapshots;
  std::uint64_t event_count = 0;
};

using SampleObserver = std::function<void(double, const QueueField&)>;

struct SimulationOptions {
  double slab_width = kDefaultSlabWidth;
  DynamicsKind kind = DynamicsKind::Interference;
};

inline void validate_init(const Domain& dom, const QueueField& init) {
  if (init.values.size() != dom.site_count()) throw Error(ErrorCode::ShapeMismatch, "field size != domain size");
  for (std::size_t i = 0; i < init.values.size(); ++i) {
    if (init.values[i] < 0) throw Error(ErrorCode::ValidationError, "queue lengths must be >= 0");
    if (dom.is_frozen(i) && init.values[i] != 0) throw Error(ErrorCode::ValidationError, "frozen sites must hold 0");
  }
}

/// Runs the field from `start` to `end` and calls `observe` at each of the
/// (sorted) sample times with the state just after all events before it.
/// Returns the number of events processed.
inline std::uint64_t simulate_observed(const Domain& dom, const InteractionTable& table, double lambda,
                                       QueueField& field, double start, double end, std::uint64_t seed,
                                       std::span<const double> sample_times, const SampleObserver& observe,
                                       const SimulationOptions& opt = {}) {
  if (!(end > start)) throw Error(ErrorCode::InvalidWindow, "window end must exceed start");
  for (std::size_t s = 0; s < sample_times.size(); ++s) {
    if (sample_times[s] < start || sample_times[s] > end)
      throw Error(ErrorCode::InvalidWindow, "sample time outside window");
    if (s > 0 && sample_times[s] < sample_times[s - 1])
      throw Error(ErrorCode::InvalidWindow, "sample times must be sorted");
  }
  field.time = start;
  EventStream stream(dom, seed, lambda, start, end, opt.slab_width);
  std::size_t next = 0;
  std::uint64_t count = 0;
  Event e;
  while (stream.next(e)) {
    while (next < sample_times.size() && sample_times[next] <= e.time) {
      field.time = sample_times[next];
      observe(sample_times[next++], field);
    }
    apply_event(field, dom, table, e, opt.kind);
    ++count;
  }
  while (next < sample_times.size()) {
    field.time = sample_times[next];
    observe(sample_times[next++], field);
  }
  field.time = end;
  return count;
}

inline Trajectory simulate(const Domain& dom, const InterferenceKernel& k, double lambda, const QueueField& init,
                           double start, double end, std::uint64_t seed, std::span<const double> sample_times,
                           const SimulationOptions& opt = {}) {
  validate_init(dom, init);
  const InteractionTable table(dom, k);
  Trajectory traj;
  QueueField f = init;
  traj.event_count = simulate_observed(dom, table, lambda, f, start, end, seed, sample_times,
                                       [&](double t, const QueueField& cur) {
                                         traj.times.push_back(t);
                                         traj.snapshots.push_back(cur);
                                       },
                                       opt);
  return traj;
}

/// One member of a synchronous coupling.
struct CoupledVariant {
  QueueField init;
  InterferenceKernel kernel;
  Domain domain;
  DynamicsKind kind = DynamicsKind::Interference;
};

/// Runs every variant on the identical noise stream.
inline std::vector<Trajectory> couple_simulate(const std::vector<CoupledVariant>& variants, double lambda,
                                               double start, double end, std::uint64_t seed,
                                               std::span<const double> sample_times,
                                               double slab_width = kDefaultSlabWidth) {
  if (variants.empty()) return {};
  if (!(end > start)) throw Error(ErrorCode::InvalidWindow, "window end must exceed start");
  const Domain& ref = variants.front().domain;
  std::vector<InteractionTable> tables;
  std::vector<QueueField> fields;
  for (const auto& v : variants) {
    if (!v.domain.same_sites(ref)) throw Error(ErrorCode::ShapeMismatch, "variants must share the site set");
    validate_init(v.domain, v.init);
    tables.emplace_back(v.domain, v.kernel);
    fields.push_back(v.init);
  }
  std::vector<Trajectory> out(variants.size());
  auto snap = [&](double t) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      fields[v].time = t;
      out[v].times.push_back(t);
      out[v].snapshots.push_back(fields[v]);
    }
  };
  // Arrival masks are applied per variant, so the stream carries every site.
  EventStream stream(ref, seed, lambda, start, end, slab_width, /*respect_mask=*/false);
  std::size_t next = 0;
  std::uint64_t count = 0;
  Event e;
  while (stream.next(e)) {
    while (next < sample_times.size() && sample_times[next] <= e.time) snap(sample_times[next++]);
    for (std::size_t v = 0; v < variants.size(); ++v)
      apply_event(fields[v], variants[v].domain, tables[v], e, variants[v].kind);
    ++count;
  }
  while (next < sample_times.size()) snap(sample_times[next++]);
  for (auto& t : out) t.event_count = count;
  return out;
}

/// Evenly spaced sample times start + step, start + 2 step, ... <= end.
inline std::vector<double> sample_grid(double start, double end, double step) {
  std::vector<double> t;
  for (std::size_t k = 1;; ++k) {
    const double s = start + static_cast<double>(k) * step;
    if (s > end) break;
    t.push_back(s);
  }
  return t;
}

/// CSV with columns time, x1..xd, value.
inline void write_trajectory_csv(std::ostream& os, const Domain& dom, const Trajectory& traj) {
  os << "time";
  for (int k = 0; k < dom.dim(); ++k) os << ",x" << (k + 1);
  os << ",value\n";
  os.precision(17);
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    for (std::size_t i = 0; i < dom.site_count(); ++i) {
      os << traj.times[s];
      for (int c : dom.site_of(i)) os << ',' << c;
      os << ',' << traj.snapshots[s].values[i] << '\n';
    }
  }
}

}  // namespace iqnet

#endif  // IQNET_DYNAMICS_HPP
