#ifndef IQNET_ORACLE_HPP
#define IQNET_ORACLE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "iqnet/dynamics.hpp"

namespace iqnet {

inline constexpr std::size_t kMaxOracleSites = 4;
inline constexpr std::size_t kMaxOracleStates = 1'000'000;

/// All fields with every site in [0, cap], indexed in mixed radix (cap + 1).
class CappedStateSpace {
 public:
  CappedStateSpace(Domain dom, int cap) : dom_(std::move(dom)), cap_(cap) {
    if (cap < 1) throw Error(ErrorCode::ValidationError, "cap must be >= 1");
    if (dom_.site_count() > kMaxOracleSites)
      throw Error(ErrorCode::StateSpaceTooLarge, "exact oracle supports at most 4 sites");
    double n = std::pow(static_cast<double>(cap + 1), static_cast<double>(dom_.site_count()));
    if (n > static_cast<double>(kMaxOracleStates))
      throw Error(ErrorCode::StateSpaceTooLarge, "more than 1e6 capped states");
    size_ = static_cast<std::size_t>(n);
  }

  const Domain& domain() const noexcept { return dom_; }
  int cap() const noexcept { return cap_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t sites() const noexcept { return dom_.site_count(); }

  std::vector<int> decode(std::size_t idx) const {
    std::vector<int> x(sites());
    for (std::size_t i = sites(); i-- > 0;) {
      x[i] = static_cast<int>(idx % static_cast<std::size_t>(cap_ + 1));
      idx /= static_cast<std::size_t>(cap_ + 1);
    }
    return x;
  }

  std::size_t encode(const std::vector<int>& x) const {
    std::size_t idx = 0;
    for (int v : x) idx = idx * static_cast<std::size_t>(cap_ + 1) + static_cast<std::size_t>(v);
    return idx;
  }

  std::size_t stride(std::size_t site) const {
    std::size_t s = 1;
    for (std::size_t i = site + 1; i < sites(); ++i) s *= static_cast<std::size_t>(cap_ + 1);
    return s;
  }

 private:
  Domain dom_;
  int cap_;
  std::size_t size_ = 0;
};

/// Off-diagonal rates in CSR form; diagonal is minus the row sum.
struct SparseGenerator {
  std::size_t states = 0;
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> col;
  std::vector<double> rate;
  std::vector<double> diag;
  double uniformization_rate = 1.0;

  double off_diagonal(std::size_t from, std::size_t to) const {
    for (std::size_t p = row_start[from]; p < row_start[from + 1]; ++p)
      if (col[p] == to) return rate[p];
    return 0.0;
  }
};

/// Arrivals at capped or masked sites are dropped (reflecting truncation).
inline SparseGenerator build_generator(const CappedStateSpace& space, const InterferenceKernel& k, double lambda) {
  const Domain& dom = space.domain();
  const InteractionTable table(dom, k);
  SparseGenerator g;
  g.states = space.size();
  g.row_start.reserve(g.states + 1);
  g.row_start.push_back(0);
  g.diag.assign(g.states, 0.0);
  g.uniformization_rate = (lambda + 1.0) * static_cast<double>(space.sites());
  std::vector<std::size_t> strides(space.sites());
  for (std::size_t i = 0; i < space.sites(); ++i) strides[i] = space.stride(i);
  for (std::size_t s = 0; s < g.states; ++s) {
    const std::vector<int> x = space.decode(s);
    double out = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < space.cap() && dom.arrivals_allowed(i) && lambda > 0.0) {
        g.col.push_back(static_cast<std::uint32_t>(s + strides[i]));
        g.rate.push_back(lambda);
        out += lambda;
      }
      const double r = service_rate(table, x, i);
      if (r > 0.0) {
        g.col.push_back(static_cast<std::uint32_t>(s - strides[i]));
        g.rate.push_back(r);
        out += r;
      }
    }
    g.diag[s] = -out;
    g.row_start.push_back(g.col.size());
  }
  return g;
}

/// pi Q (row vector times generator).
inline std::vector<double> left_multiply(const SparseGenerator& g, const std::vector<double>& pi) {
  std::vector<double> out(g.states, 0.0);
  for (std::size_t s = 0; s < g.states; ++s) {
    out[s] += pi[s] * g.diag[s];
    for (std::size_t p = g.row_start[s]; p < g.row_start[s + 1]; ++p) out[g.col[p]] += pi[s] * g.rate[p];
  }
  return out;
}

/// Power iteration on P = I + Q / Lambda until successive iterates are
/// within `tol` in L1. `initial` seeds the iteration when given.
inline std::vector<double> stationary_solve(const SparseGenerator& g, double tol = 1e-12,
                                            std::size_t max_iter = 5'000'000,
                                            const std::vector<double>& initial = {}) {
  std::vector<double> pi = initial.size() == g.states ? initial : std::vector<double>(g.states, 1.0 / g.states);
  std::vector<double> next(g.states);
  const double inv = 1.0 / g.uniformization_rate;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t s = 0; s < g.states; ++s) next[s] = pi[s] * (1.0 + g.diag[s] * inv);
    for (std::size_t s = 0; s < g.states; ++s) {
      const double w = pi[s] * inv;
      if (w == 0.0) continue;
      for (std::size_t p = g.row_start[s]; p < g.row_start[s + 1]; ++p) next[g.col[p]] += w * g.rate[p];
    }
    double total = 0.0;
    for (double v : next) total += v;
    double diff = 0.0;
    for (std::size_t s = 0; s < g.states; ++s) {
      next[s] /= total;
      diff += std::abs(next[s] - pi[s]);
    }
    pi.swap(next);
    if (diff < tol) return pi;
  }
  throw Error(ErrorCode::NoConvergence, "power iteration did not reach tolerance");
}

struct OracleRequests {
  int k_max = 5;
  std::vector<double> mgf_c;
};

struct OracleResult {
  std::vector<double> pi;
  double truncation_mass = 0.0;
  std::vector<double> means;         // per site
  std::vector<double> moments;       // mu_0 .. mu_kmax of the origin site
  std::vector<double> mgf_c;
  std::vector<double> mgf;           // E exp(c X_0)
  std::vector<double> product_0j;    // E[X_0 X_j] per site j
  std::vector<double> covariance_0j; // Cov(X_0, X_j) per site j
  std::vector<double> pmf;           // law of X_0 on 0..cap
  std::vector<double> ccdf;          // P(X_0 >= x), x = 0..cap
};

inline OracleResult oracle_functionals(const std::vector<double>& pi, const CappedStateSpace& space,
                                       const OracleRequests& req = {}) {
  const std::size_t origin = space.domain().origin();
  const std::size_t m = space.sites();
  OracleResult r;
  r.pi = pi;
  r.means.assign(m, 0.0);
  r.moments.assign(static_cast<std::size_t>(req.k_max) + 1, 0.0);
  r.mgf_c = req.mgf_c;
  r.mgf.assign(req.mgf_c.size(), 0.0);
  r.product_0j.assign(m, 0.0);
  r.pmf.assign(static_cast<std::size_t>(space.cap()) + 1, 0.0);
  for (std::size_t s = 0; s < space.size(); ++s) {
    const double p = pi[s];
    if (p == 0.0) continue;
    const std::vector<int> x = space.decode(s);
    bool at_cap = false;
    for (std::size_t i = 0; i < m; ++i) {
      r.means[i] += p * x[i];
      at_cap = at_cap || x[i] == space.cap();
      r.product_0j[i] += p * x[origin] * x[i];
    }
    if (at_cap) r.truncation_mass += p;
    const double x0 = x[origin];
    double pw = 1.0;
    for (auto& mu : r.moments) {
      mu += p * pw;
      pw *= x0;
    }
    for (std::size_t c = 0; c < req.mgf_c.size(); ++c) r.mgf[c] += p * std::exp(req.mgf_c[c] * x0);
    r.pmf[static_cast<std::size_t>(x[origin])] += p;
  }
  r.covariance_0j.resize(m);
  for (std::size_t j = 0; j < m; ++j) r.covariance_0j[j] = r.product_0j[j] - r.means[origin] * r.means[j];
  r.ccdf.assign(r.pmf.size(), 0.0);
  double tail = 0.0;
  for (std::size_t x = r.pmf.size(); x-- > 0;) {
    tail += r.pmf[x];
    r.ccdf[x] = tail;
  }
  r.ccdf[0] = 1.0;
  return r;
}

/// Solves a small instance end to end. The initial guess is a product of
/// geometric laws with the infinite-lattice mean.
inline OracleResult solve_oracle(const Domain& dom, const InterferenceKernel& k, double lambda, int cap,
                                 const OracleRequests& req = {}, double tol = 1e-12) {
  const CappedStateSpace space(dom, cap);
  const SparseGenerator g = build_generator(space, k, lambda);
  std::vector<double> init(space.size(), 0.0);
  const double stable = 1.0 - lambda * k.sum();
  const double mean = stable > 0.0 ? lambda / stable : 1.0;
  const double ratio = mean / (1.0 + mean);
  double total = 0.0;
  for (std::size_t s = 0; s < space.size(); ++s) {
    double p = 1.0;
    for (int v : space.decode(s)) p *= std::pow(ratio, v);
    init[s] = p;
    total += p;
  }
  for (auto& v : init) v /= total;
  return oracle_functionals(stationary_solve(g, tol, 5'000'000, init), space, req);
}

inline nlohmann::json oracle_to_json(const OracleResult& r) {
  return {{"truncation_mass", r.truncation_mass},
          {"means", r.means},
          {"moments", r.moments},
          {"mgf_c", r.mgf_c},
          {"mgf", r.mgf},
          {"product_0j", r.product_0j},
          {"covariance_0j", r.covariance_0j},
          {"pmf", r.pmf},
          {"ccdf", r.ccdf}};
}

/// CSV with columns state, probability; the state is the site values joined by ':'.
inline void write_pi_csv(std::ostream& os, const CappedStateSpace& space, const std::vector<double>& pi) {
  os << "state,probability\n";
  os.precision(17);
  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto x = space.decode(s);
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ":" : "") << x[i];
    os << ',' << pi[s] << '\n';
  }
}

}  // namespace iqnet

#endif  // IQNET_ORACLE_HPP
