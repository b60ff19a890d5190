#ifndef IQNET_SUITE_HPP
#define IQNET_SUITE_HPP

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "iqnet/oracle.hpp"
#include "iqnet/verify.hpp"

namespace iqnet {

/// Forward time averages from all-empty starts, one replicate per seed offset,
/// with every replicate's batches pooled into one estimate.
inline StationaryEstimate forward_stationary_estimate(const Domain& dom, const InterferenceKernel& k, double lambda,
                                                      double horizon, double burn_in, double sample_interval,
                                                      std::size_t batch_count, const std::vector<double>& c_grid,
                                                      std::uint64_t seed, std::size_t replicates = 1,
                                                      double slab_width = kDefaultSlabWidth) {
  const InteractionTable table(dom, k);
  const auto times = sample_grid(0.0, horizon, sample_interval);
  auto per = parallel_map(replicates, [&](std::size_t r) {
    TimeAverageEstimator est(dom, burn_in, horizon, batch_count, c_grid);
    QueueField f = QueueField::empty(dom);
    SimulationOptions opt;
    opt.slab_width = slab_width;
    simulate_observed(dom, table, lambda, f, 0.0, horizon, seed + r, times,
                      [&](double t, const QueueField& q) { est.observe(t, q); }, opt);
    if (est.snapshots() < 10 * batch_count)
      throw Error(ErrorCode::InsufficientData, "post-burn-in samples fewer than 10 per batch");
    return est.batches();
  });
  std::vector<MarginalBatch> all;
  for (auto& b : per) all.insert(all.end(), b.begin(), b.end());
  return estimate_from_batches(all, c_grid, burn_in);
}

/// Independent CFTP samples, replicate r using seed + r.
inline std::vector<CftpResult> cftp_replicates(const Domain& dom, const InterferenceKernel& k, double lambda,
                                               const std::vector<std::size_t>& window, std::uint64_t seed,
                                               std::size_t replicates, const CftpOptions& opt = {}) {
  return parallel_map(replicates, [&](std::size_t r) { return cftp_sample(dom, k, lambda, window, seed + r, opt); });
}

inline std::vector<std::size_t> all_sites(const Domain& dom) {
  std::vector<std::size_t> s(dom.site_count());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

/// Random symmetric kernel on Z^d with support radius <= max_radius.
template <typename Rng>
InterferenceKernel random_kernel(int dim, int max_radius, Rng& rng) {
  std::uniform_int_distribution<int> pick(-max_radius, max_radius);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  std::map<Site, double> m;
  m[Site(dim, 0)] = 1.0;
  const int terms = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int t = 0; t < terms; ++t) {
    Site off(dim);
    for (auto& c : off) c = pick(rng);
    if (linf_norm(off) == 0) continue;
    Site neg(dim);
    for (int k = 0; k < dim; ++k) neg[k] = -off[k];
    const double v = w(rng);
    m[off] = v;
    m[neg] = v;
  }
  return make_kernel(dim, {m.begin(), m.end()});
}

/// Ordering violations between two coupled trajectories (lower must stay <= upper).
inline std::size_t ordering_violations(const Trajectory& lower, const Trajectory& upper) {
  std::size_t v = 0;
  for (std::size_t s = 0; s < lower.snapshots.size(); ++s)
    for (std::size_t i = 0; i < lower.snapshots[s].values.size(); ++i)
      if (lower.snapshots[s].values[i] > upper.snapshots[s].values[i]) ++v;
  return v;
}

/// The self-check suite run by `iqnet verify` and the verify-all experiment:
/// deterministic inequalities, exact-oracle identities, and short statistical
/// runs on the canonical 3-site torus with a = {1, .5, .5}.
inline std::vector<CheckReport> run_verify_suite(std::uint64_t seed) {
  std::vector<CheckReport> out;
  std::mt19937_64 rng(seed);
  const InterferenceKernel nn = nearest_neighbor_kernel(1, 0.5);

  {  // deterministic ratio inequality on random instances
    double worst = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (int t = 0; t < 1000; ++t) {
      const int n = std::uniform_int_distribution<int>(1, 16)(rng);
      const Domain torus = Domain::torus(1, n);
      const auto k = random_kernel(1, std::min(n, 3), rng);
      std::vector<double> y(torus.site_count());
      for (auto& v : y) v = std::uniform_int_distribution<int>(0, 12)(rng);
      const int j = std::uniform_int_distribution<int>(1, 3)(rng);
      const auto r = check_ratio_inequality(torus, y, k, j);
      pass = pass && r.pass;
      worst = std::min(worst, r.slack);
    }
    auto r = make_report("ratio_inequality_random", "1000 random instances", worst, 1.0,
                         "minimum slack over random (y, kernel, j)");
    r.pass = pass;
    out.push_back(r);
  }

  {  // single-site oracle reproduces the Geometric(1 - lambda) law
    const double lambda = 0.5;
    const auto o = solve_oracle(Domain::torus(1, 0), make_kernel(1, {{{0}, 1.0}}), lambda, 60);
    double err = std::abs(o.means[0] - lambda / (1 - lambda));
    for (std::size_t x = 0; x <= 30; ++x) err = std::max(err, std::abs(o.ccdf[x] - std::pow(lambda, x)));
    out.push_back(make_report("oracle_geometric", "single site lambda=0.5 cap=60", 1e-9 - err, 1.0));
  }

  const double lam = 0.2;
  const auto b = compute_constants(lam, nn.sum());
  const Domain tri = Domain::torus(1, 1);
  const auto o = solve_oracle(tri, nn, lam, 30, {5, {b.c0 / 4, b.c0 / 2}});
  for (int k = 1; k <= 5; ++k) out.push_back(check_moment_recursion(o.moments, b.D, k));
  out.push_back(check_mgf_bound(o.mgf[0], b.c0 / 4, b));
  out.push_back(check_mgf_bound(o.mgf[1], b.c0 / 2, b));
  out.push_back(tail_sandwich_check(o.ccdf, {}, b, b.c0 / 2, 0, 15));
  out.push_back(check_mean_formula(o.means[1], 0.0, lam, nn.sum(), 1e-8));
  out.back().name = "oracle_torus_mean_identity";

  {  // short forward run on the 3-site torus against the oracle mean
    const auto est = forward_stationary_estimate(tri, nn, lam, 20000.0, 4000.0, 1.0, 32, {}, seed);
    const double gap = std::abs(est.mean - o.means[1]);
    out.push_back(make_report("simulated_mean_vs_oracle", "3-site torus lambda=0.2", 3.0 * est.mean_se - gap, 1.0));
  }

  {  // monotone couplings
    std::size_t violations = 0;
    const Domain dom = Domain::torus(1, 6);
    const Domain box = Domain::zero_box(1, 6);
    for (int t = 0; t < 10; ++t) {
      QueueField lo = QueueField::empty(dom), hi = QueueField::empty(dom);
      for (std::size_t i = 0; i < dom.site_count(); ++i) {
        lo.values[i] = std::uniform_int_distribution<int>(0, 3)(rng);
        hi.values[i] = lo.values[i] + std::uniform_int_distribution<int>(0, 3)(rng);
      }
      const auto times = sample_grid(0, 200, 1.0);
      const auto tr = couple_simulate({{lo, nn, dom}, {hi, nn, dom}, {QueueField::empty(dom), nn, dom, DynamicsKind::MM1Companion},
                                       {QueueField::empty(dom), nn, dom}, {QueueField::empty(dom), nn, box}},
                                      0.3, 0, 200, seed + t, times);
      violations += ordering_violations(tr[0], tr[1]) + ordering_violations(tr[2], tr[3]) +
                    ordering_violations(tr[4], tr[3]);
    }
    const double slack = violations == 0 ? 0.0 : -static_cast<double>(violations);
    out.push_back(make_report("monotone_coupling", "10 coupled runs", slack, 1.0));
  }

  {  // CFTP trace monotonicity and noise reuse
    bool mono = true;
    for (int t = 0; t < 20; ++t) {
      const auto r = cftp_sample(tri, nn, lam, all_sites(tri), seed + 100 + t, {8.0, 2, 1024.0});
      mono = mono && trace_is_monotone(r);
    }
    const bool consistent = restriction_consistent(Domain::torus(1, 4), nn, 0.3, 64.0, seed);
    out.push_back(make_report("cftp_trace_monotone", "20 runs", mono ? 0.0 : -1.0));
    out.push_back(make_report("cftp_restriction_consistency", "T=64", consistent ? 0.0 : -1.0));
  }

  {  // frozen strip: the valid layout disconnects, the constructed violation does not
    const int n = 64;
    const int L = FrozenStripSchedule{}(n);
    const Domain dom = Domain::frozen_strip(1, n, L);
    const auto w0 = dom.window({0}, 0), w1 = dom.window({n}, 0);
    const bool valid = windows_disconnected(dom, truncate_kernel(nn, L), w0, w1);
    const auto wide =
        make_kernel(1, {{{0}, 1.0}, {{1}, 0.5}, {{-1}, 0.5}, {{2 * L + 2}, 0.1}, {{-(2 * L + 2)}, 0.1}});
    const bool violated = !windows_disconnected(dom, wide, w0, w1);
    out.push_back(make_report("frozen_strip_structure", "n=64 valid", valid ? 0.0 : -1.0));
    out.push_back(make_report("frozen_strip_violation_detected", "n=64 radius 2L+2", violated ? 0.0 : -1.0));
  }

  {  // c_0 solves c e^c = D
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double sa = std::uniform_real_distribution<double>(1.0, 5.0)(rng);
      const double l = std::uniform_real_distribution<double>(0.0, 0.99)(rng) / sa;
      const auto c = compute_constants(l, sa);
      worst = std::max(worst, std::abs(c.c0 * std::exp(c.c0) - c.D));
    }
    out.push_back(make_report("constants_root", "100 random stable pairs", 1e-10 - worst, 1.0));
  }
  return out;
}

}  // namespace iqnet

#endif  // IQNET_SUITE_HPP
