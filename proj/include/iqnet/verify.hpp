#ifndef IQNET_VERIFY_HPP
#define IQNET_VERIFY_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqnet/cftp.hpp"
#include "iqnet/parallel.hpp"
#include "iqnet/statistics.hpp"

namespace iqnet {

inline constexpr double kCheckEpsilon = 1e-9;

/// D = (1/sum_a - lambda) / (lambda + 1) and c_0 with c_0 e^{c_0} = D.
struct BoundConstants {
  double lambda = 0.0;
  double sum_a = 1.0;
  double D = 0.0;
  double c0 = 0.0;

  /// D / (D - c e^c); infinite for c >= c_0.
  double mgf_bound(double c) const {
    const double g = c * std::exp(c);
    return g < D ? D / (D - g) : std::numeric_limits<double>::infinity();
  }
};

inline BoundConstants compute_constants(double lambda, double sum_a) {
  if (!(lambda >= 0.0) || !(sum_a >= 1.0)) throw Error(ErrorCode::ValidationError, "need lambda >= 0, sum_a >= 1");
  if (lambda * sum_a >= 1.0) throw Error(ErrorCode::Unstable, "lambda >= 1/sum_a");
  BoundConstants b;
  b.lambda = lambda;
  b.sum_a = sum_a;
  b.D = (1.0 / sum_a - lambda) / (lambda + 1.0);
  // c e^c is increasing and c e^c >= c, so the root lies in [0, D].
  double lo = 0.0, hi = b.D;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(mid) < b.D ? lo : hi) = mid;
  }
  b.c0 = 0.5 * (lo + hi);
  return b;
}

struct CheckReport {
  std::string name;
  std::string inputs_digest;
  bool pass = false;
  double slack = 0.0;  // >= 0 means pass
  std::string notes;
};

inline std::string digest_of(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// `scale` sets the tolerance: pass iff slack >= -eps * max(1, scale).
inline CheckReport make_report(std::string name, const std::string& inputs, double slack, double scale = 1.0,
                               std::string notes = {}) {
  CheckReport r;
  r.name = std::move(name);
  r.inputs_digest = digest_of(inputs);
  r.slack = slack;
  r.pass = slack >= -kCheckEpsilon * std::max(1.0, std::abs(scale));
  r.notes = std::move(notes);
  return r;
}

inline nlohmann::json report_to_json(const CheckReport& r) {
  return {{"name", r.name}, {"inputs_digest", r.inputs_digest}, {"pass", r.pass}, {"slack", r.slack},
          {"notes", r.notes}};
}

/// sum_i R_i y_i^j >= (1 / sum_a) sum_i y_i^j for any nonnegative y on a torus.
inline CheckReport check_ratio_inequality(const Domain& torus, const std::vector<double>& y,
                                          const InterferenceKernel& k, int j) {
  if (!torus.wraps()) throw Error(ErrorCode::InvalidDomain, "ratio inequality is stated on a torus");
  if (j < 1) throw Error(ErrorCode::ValidationError, "j must be >= 1");
  if (y.size() != torus.site_count()) throw Error(ErrorCode::ShapeMismatch, "sequence size != torus size");
  const InteractionTable table(torus, k);
  double lhs = 0.0, sum_pow = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) throw Error(ErrorCode::ValidationError, "sequence must be nonnegative");
    const double p = std::pow(y[i], j);
    sum_pow += p;
    if (y[i] == 0.0) continue;
    double den = 0.0;
    table.for_each_neighbor(i, [&](std::uint32_t nb, double w) { den += w * y[nb]; });
    lhs += (y[i] / den) * p;
  }
  const double rhs = sum_pow / k.sum();
  std::ostringstream in;
  in.precision(17);
  in << "ratio j=" << j << " n=" << torus.half_width() << " sum_a=" << k.sum() << " y0=" << y.front();
  return make_report("ratio_inequality", in.str(), lhs - rhs, rhs);
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// D (k+1) mu_k <= sum_{j<k} C(k+1, j) mu_j; slack = RHS - LHS.
inline CheckReport check_moment_recursion(const std::vector<double>& mu, double D, int k) {
  if (k < 1 || static_cast<int>(mu.size()) <= k) throw Error(ErrorCode::ValidationError, "need mu_0 .. mu_k, k >= 1");
  if (std::abs(mu[0] - 1.0) > 1e-9) throw Error(ErrorCode::ValidationError, "mu_0 must equal 1");
  const double lhs = D * (k + 1) * mu[static_cast<std::size_t>(k)];
  double rhs = 0.0;
  for (int j = 0; j < k; ++j) rhs += binomial(k + 1, j) * mu[static_cast<std::size_t>(j)];
  std::ostringstream in;
  in.precision(17);
  in << "moment k=" << k << " D=" << D << " mu_k=" << mu[static_cast<std::size_t>(k)];
  return make_report("moment_recursion_k" + std::to_string(k), in.str(), rhs - lhs, rhs);
}

/// value <= D / (D - c e^c) + allowance.
inline CheckReport check_mgf_bound(double mgf_value, double c, const BoundConstants& b, double allowance = 0.0) {
  if (c < 0.0 || c >= b.c0) throw Error(ErrorCode::COutOfRange, "c must lie in [0, c_0)");
  const double bound = b.mgf_bound(c);
  std::ostringstream in;
  in.precision(17);
  in << "mgf c=" << c << " D=" << b.D << " value=" << mgf_value;
  return make_report("mgf_bound", in.str(), bound + allowance - mgf_value, bound);
}

inline double stationary_mean_target(double lambda, double sum_a) {
  if (lambda * sum_a >= 1.0) throw Error(ErrorCode::Unstable, "lambda >= 1/sum_a");
  return lambda / (1.0 - lambda * sum_a);
}

/// |mean - lambda/(1 - lambda sum_a)| <= max(3 SE, rel_tol * target).
inline CheckReport check_mean_formula(double mean, double se, double lambda, double sum_a, double rel_tol = 0.02) {
  const double target = stationary_mean_target(lambda, sum_a);
  const double allowance = std::max(3.0 * se, rel_tol * target);
  std::ostringstream in;
  in.precision(17);
  in << "mean lambda=" << lambda << " sum_a=" << sum_a << " est=" << mean << " se=" << se;
  return make_report("mean_formula", in.str(), allowance - std::abs(mean - target), target,
                     "identity proven on the infinite lattice; applied to a finite volume");
}

/// Reliable CCDF range: x = 0 .. last x with CCDF(x) > 10 / sample_count.
inline std::size_t reliable_ccdf_end(const std::vector<double>& ccdf, double sample_count) {
  std::size_t hi = 0;
  while (hi < ccdf.size() && ccdf[hi] > 10.0 / sample_count) ++hi;
  return hi;  // exclusive
}

/// lambda^x - 3 SE <= CCDF(x) <= mgf_bound(c) e^{-c x} + 3 SE for x in [x_lo, x_hi).
inline CheckReport tail_sandwich_check(const std::vector<double>& ccdf, const std::vector<double>& ccdf_se,
                                       const BoundConstants& b, double c_used, std::size_t x_lo, std::size_t x_hi) {
  if (c_used < 0.0 || c_used >= b.c0) throw Error(ErrorCode::COutOfRange, "c must lie in [0, c_0)");
  x_hi = std::min(x_hi, ccdf.size());
  double slack = std::numeric_limits<double>::infinity();
  std::size_t worst = x_lo;
  const double m = b.mgf_bound(c_used);
  for (std::size_t x = x_lo; x < x_hi; ++x) {
    const double se = ccdf_se.empty() ? 0.0 : ccdf_se[x];
    const double xv = static_cast<double>(x);
    const double lower = std::pow(b.lambda, xv) - 3.0 * se;
    const double upper = m * std::exp(-c_used * xv) + 3.0 * se;
    const double s = std::min(ccdf[x] - lower, upper - ccdf[x]);
    if (s < slack) {
      slack = s;
      worst = x;
    }
  }
  if (x_hi <= x_lo) slack = 0.0;
  std::ostringstream in, notes;
  in.precision(17);
  in << "tail lambda=" << b.lambda << " sum_a=" << b.sum_a << " c=" << c_used << " range=" << x_lo << ".." << x_hi;
  notes << "tightest at x=" << worst;
  return make_report("tail_sandwich", in.str(), slack, 1.0, notes.str());
}

/// True when no path through non-frozen sites joins the two windows.
inline bool windows_disconnected(const Domain& dom, const InterferenceKernel& k, const std::vector<std::size_t>& a,
                                 const std::vector<std::size_t>& b) {
  const InteractionTable table(dom, k);
  std::vector<char> seen(dom.site_count(), 0);
  std::deque<std::size_t> q;
  for (std::size_t s : a)
    if (!dom.is_frozen(s)) {
      seen[s] = 1;
      q.push_back(s);
    }
  while (!q.empty()) {
    const std::size_t s = q.front();
    q.pop_front();
    // The kernel is symmetric, so neighbour lists give both edge directions.
    table.for_each_neighbor(s, [&](std::uint32_t nb, double) {
      if (!seen[nb] && !dom.is_frozen(nb)) {
        seen[nb] = 1;
        q.push_back(nb);
      }
    });
  }
  for (std::size_t s : b)
    if (seen[s]) return false;
  return true;
}

struct FrozenStripOptions {
  int K = 0;
  std::size_t replicates = 2000;
  bool truncate = true;  // run with a^{L_n}; false keeps the kernel as given
  double tv_threshold = 0.02;
  CftpOptions cftp = {};
};

struct FrozenStripReport {
  int n = 0;
  int L_n = 0;
  CheckReport structural;
  CheckReport correlation;
  CheckReport marginal;
  CheckReport combined;
  double correlation_estimate = 0.0;
  double correlation_se = 0.0;
  double pair_tv = 0.0;    // TV of the windows at 0 and n e_1 alone
  double pooled_tv = 0.0;  // TV pooled over mirror-image window pairs
  std::size_t stabilized_runs = 0;
};

namespace detail {

/// Window values around `center`, listed with axis-1 offsets negated when
/// `reflect` is set.
inline std::vector<int> window_key(const Domain& dom, const QueueField& f, const Site& center, int K, bool reflect) {
  std::vector<int> out;
  const auto sites = dom.window(center, K);
  out.reserve(sites.size());
  if (!reflect) {
    for (std::size_t s : sites) out.push_back(f.values[s]);
    return out;
  }
  // Reflection z_1 -> -z_1 of the window: mirror each offset on axis 1.
  for (std::size_t s : sites) {
    Site off = dom.site_of(s);
    for (int d = 0; d < dom.dim(); ++d) off[d] = dom.wrap(off[d] - center[d]);
    Site mirrored = center;
    mirrored[0] = dom.wrap(center[0] - off[0]);
    for (int d = 1; d < dom.dim(); ++d) mirrored[d] = dom.wrap(center[d] + off[d]);
    out.push_back(f.values[dom.index_of(mirrored)]);
  }
  return out;
}

inline double total_variation(const std::map<std::vector<int>, double>& p, const std::map<std::vector<int>, double>& q) {
  double tv = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    tv += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) tv += v;
  return 0.5 * tv;
}

inline void normalize(std::map<std::vector<int>, double>& m) {
  double t = 0.0;
  for (auto& [k, v] : m) t += v;
  for (auto& [k, v] : m) v /= t;
}

}  // namespace detail

/// Frozen-strip construction: torus B_n with arrivals switched off on the
/// strips, kernel truncated at L_n, checked for (i) disconnection of the
/// windows at 0 and n e_1, (ii) zero replicate correlation of the window sums
/// and (iii) equal window marginals under the reflection z_1 -> n - z_1.
inline FrozenStripReport frozen_strip_experiment(int n, const FrozenStripSchedule& schedule,
                                                 const InterferenceKernel& kernel, double lambda,
                                                 std::uint64_t seed, const FrozenStripOptions& opt = {}) {
  const int L = schedule(n);
  const int K = opt.K;
  if (n < 2 * L + 2 * K + 2 || L < 0) throw Error(ErrorCode::DomainTooSmall, "need n >= 2 L_n + 2 K + 2");
  FrozenStripReport rep;
  rep.n = n;
  rep.L_n = L;
  const int d = kernel.dim();
  const Domain dom = Domain::frozen_strip(d, n, L);
  const InterferenceKernel k = opt.truncate ? truncate_kernel(kernel, L) : kernel;
  Site c0(d, 0), c1(d, 0);
  c1[0] = n;
  const auto w0 = dom.window(c0, K);
  const auto w1 = dom.window(c1, K);
  std::ostringstream in;
  in.precision(17);
  in << "frozen n=" << n << " L=" << L << " K=" << K << " lambda=" << lambda << " radius=" << k.radius()
     << " replicates=" << opt.replicates << " seed=" << seed;

  const bool disconnected = windows_disconnected(dom, k, w0, w1);
  rep.structural = make_report("frozen_strip_structure", in.str(), disconnected ? 0.0 : -1.0, 1.0,
                               disconnected ? "no path crosses the frozen strips" : "a kernel edge crosses a strip");

  std::vector<std::size_t> observe = w0;
  observe.insert(observe.end(), w1.begin(), w1.end());
  const auto fields = parallel_map(opt.replicates, [&](std::size_t r) {
    return cftp_sample(dom, k, lambda, observe, seed + r, opt.cftp);
  });

  std::vector<double> f0, f1, prod;
  std::map<std::vector<int>, double> pair0, pair1, pooled0, pooled1;
  // Axis-1 coordinates of the origin's component between the two strips.
  auto frozen_at = [&](int z) {
    Site s(d, 0);
    s[0] = z;
    return dom.is_frozen(dom.index_of(s));
  };
  std::vector<int> left{0};
  for (int z = 1; z <= n && !frozen_at(z); ++z) left.push_back(z);
  for (int z = -1; z >= -n && !frozen_at(z); --z) left.push_back(z);
  for (const auto& res : fields) {
    if (res.stabilized) ++rep.stabilized_runs;
    const QueueField& f = res.sample;
    double s0 = 0, s1 = 0;
    for (std::size_t s : w0) s0 += f.values[s];
    for (std::size_t s : w1) s1 += f.values[s];
    f0.push_back(s0);
    f1.push_back(s1);
    prod.push_back(s0 * s1);
    pair0[detail::window_key(dom, f, c0, K, false)] += 1.0;
    pair1[detail::window_key(dom, f, c1, K, true)] += 1.0;
    for (int z : left) {
      Site a(d, 0), b(d, 0);
      a[0] = z;
      b[0] = dom.wrap(n - z);
      pooled0[detail::window_key(dom, f, a, K, false)] += 1.0;
      pooled1[detail::window_key(dom, f, b, K, true)] += 1.0;
    }
  }
  auto [cov, se] = fields.size() >= 2 ? detail::jackknife_cov(prod, f0, f1) : std::pair{0.0, 0.0};
  rep.correlation_estimate = cov;
  rep.correlation_se = se;
  rep.correlation = make_report("frozen_strip_correlation", in.str(), 3.0 * se - std::abs(cov), 1.0,
                                "covariance of window sums at 0 and n e_1");
  detail::normalize(pair0);
  detail::normalize(pair1);
  detail::normalize(pooled0);
  detail::normalize(pooled1);
  rep.pair_tv = detail::total_variation(pair0, pair1);
  rep.pooled_tv = detail::total_variation(pooled0, pooled1);
  std::ostringstream mnotes;
  mnotes.precision(6);
  mnotes << "pooled mirror-pair TV " << rep.pooled_tv << "; (0, n e_1) pair TV " << rep.pair_tv;
  rep.marginal = make_report("frozen_strip_marginal", in.str(), opt.tv_threshold - rep.pooled_tv, 1.0, mnotes.str());
  const bool all = rep.structural.pass && rep.correlation.pass && rep.marginal.pass;
  rep.combined = make_report("frozen_strip", in.str(),
                             std::min({rep.structural.slack, rep.correlation.slack, rep.marginal.slack}), 1.0,
                             all ? "all frozen-strip checks pass" : "a frozen-strip check failed");
  rep.combined.pass = all;
  return rep;
}

}  // namespace iqnet

#endif  // IQNET_VERIFY_HPP
