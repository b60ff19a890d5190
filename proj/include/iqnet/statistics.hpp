#ifndef IQNET_STATISTICS_HPP
#define IQNET_STATISTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "iqnet/dynamics.hpp"

namespace iqnet {

/// Standard error of the grand mean from batch means.
inline double batch_means_se(const std::vector<double>& batch_means) {
  const std::size_t b = batch_means.size();
  if (b < 2) return 0.0;
  const double m = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double v : batch_means) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

struct StationaryEstimate {
  double mean = 0.0;
  double mean_se = 0.0;
  std::vector<double> moments;  // mu_0 .. mu_5
  std::vector<double> moments_se;
  std::vector<double> mgf_c;
  std::vector<double> mgf;
  std::vector<double> mgf_se;
  std::vector<double> ccdf;  // P(X >= x), x = 0 .. max observed + 1
  std::vector<double> ccdf_se;
  std::uint64_t sample_count = 0;  // pooled site-samples
  double burn_in = 0.0;
  std::size_t batch_count = 0;
};

/// Pooled sums for one batch of site-samples.
class MarginalBatch {
 public:
  static constexpr int kMoments = 5;

  explicit MarginalBatch(std::size_t n_c = 0) : mgf_(n_c, 0.0) {}

  void add(int x, const std::vector<double>& c_grid) {
    ++count_;
    double pw = 1.0;
    for (int k = 1; k <= kMoments; ++k) {
      pw *= x;
      pow_[k] += pw;
    }
    for (std::size_t c = 0; c < c_grid.size(); ++c) mgf_[c] += std::exp(c_grid[c] * x);
    if (static_cast<std::size_t>(x) >= hist_.size()) hist_.resize(static_cast<std::size_t>(x) + 1, 0);
    ++hist_[static_cast<std::size_t>(x)];
  }

  void merge(const MarginalBatch& o) {
    count_ += o.count_;
    for (int k = 0; k <= kMoments; ++k) pow_[k] += o.pow_[k];
    for (std::size_t c = 0; c < mgf_.size(); ++c) mgf_[c] += o.mgf_[c];
    if (o.hist_.size() > hist_.size()) hist_.resize(o.hist_.size(), 0);
    for (std::size_t x = 0; x < o.hist_.size(); ++x) hist_[x] += o.hist_[x];
  }

  std::uint64_t count() const noexcept { return count_; }
  double power_sum(int k) const { return k == 0 ? static_cast<double>(count_) : pow_[k]; }
  const std::vector<double>& mgf_sums() const noexcept { return mgf_; }
  const std::vector<std::uint64_t>& histogram() const noexcept { return hist_; }

 private:
  std::uint64_t count_ = 0;
  double pow_[kMoments + 1] = {0, 0, 0, 0, 0, 0};
  std::vector<double> mgf_;
  std::vector<std::uint64_t> hist_;
};

/// Turns per-batch sums into estimates with batch-means standard errors.
inline StationaryEstimate estimate_from_batches(const std::vector<MarginalBatch>& batches,
                                                const std::vector<double>& c_grid, double burn_in = 0.0) {
  StationaryEstimate est;
  est.burn_in = burn_in;
  est.batch_count = batches.size();
  est.mgf_c = c_grid;
  MarginalBatch total(c_grid.size());
  for (const auto& b : batches) total.merge(b);
  est.sample_count = total.count();
  if (total.count() == 0) throw Error(ErrorCode::InsufficientData, "no samples");
  const double n = static_cast<double>(total.count());

  auto functional = [&](auto&& batch_sum) {
    std::vector<double> bm;
    double sum = 0.0;
    for (const auto& b : batches) {
      if (b.count() == 0) continue;
      const double s = batch_sum(b);
      sum += s;
      bm.push_back(s / static_cast<double>(b.count()));
    }
    return std::pair{sum / n, batch_means_se(bm)};
  };

  for (int k = 0; k <= MarginalBatch::kMoments; ++k) {
    auto [v, se] = functional([k](const MarginalBatch& b) { return b.power_sum(k); });
    est.moments.push_back(v);
    est.moments_se.push_back(se);
  }
  est.mean = est.moments[1];
  est.mean_se = est.moments_se[1];
  for (std::size_t c = 0; c < c_grid.size(); ++c) {
    auto [v, se] = functional([c](const MarginalBatch& b) { return b.mgf_sums()[c]; });
    est.mgf.push_back(v);
    est.mgf_se.push_back(se);
  }
  const std::size_t xmax = total.histogram().size();
  for (std::size_t x = 0; x <= xmax; ++x) {
    auto [v, se] = functional([x](const MarginalBatch& b) {
      double s = 0.0;
      for (std::size_t y = x; y < b.histogram().size(); ++y) s += static_cast<double>(b.histogram()[y]);
      return s;
    });
    est.ccdf.push_back(v);
    est.ccdf_se.push_back(se);
  }
  est.ccdf[0] = 1.0;
  est.ccdf_se[0] = 0.0;
  return est;
}

/// Sites pooled into marginal estimates: every site with arrivals on a torus,
/// otherwise only the origin.
inline std::vector<std::size_t> pooled_sites(const Domain& dom) {
  std::vector<std::size_t> s;
  if (dom.boundary() == Boundary::TorusWrap) {
    for (std::size_t i = 0; i < dom.site_count(); ++i)
      if (dom.arrivals_allowed(i)) s.push_back(i);
  } else {
    s.push_back(dom.origin());
  }
  return s;
}

/// Streaming time-average estimator: snapshots at times >= burn_in_end are
/// split into `batch_count` equal-length time batches ending at `end`.
class TimeAverageEstimator {
 public:
  TimeAverageEstimator(const Domain& dom, double burn_in_end, double end, std::size_t batch_count,
                       std::vector<double> c_grid)
      : sites_(pooled_sites(dom)), burn_in_(burn_in_end), end_(end), c_grid_(std::move(c_grid)),
        batches_(batch_count, MarginalBatch(c_grid_.size())) {
    if (batch_count < 2) throw Error(ErrorCode::InsufficientData, "need at least two batches");
    if (!(end > burn_in_end)) throw Error(ErrorCode::InvalidWindow, "burn-in covers the whole horizon");
  }

  void observe(double t, const QueueField& f) {
    if (t < burn_in_) return;
    const double frac = (t - burn_in_) / (end_ - burn_in_);
    auto b = static_cast<std::size_t>(frac * static_cast<double>(batches_.size()));
    b = std::min(b, batches_.size() - 1);
    for (std::size_t i : sites_) batches_[b].add(f.values[i], c_grid_);
    ++snapshots_;
  }

  std::uint64_t snapshots() const noexcept { return snapshots_; }
  const std::vector<MarginalBatch>& batches() const noexcept { return batches_; }

  StationaryEstimate estimate() const {
    if (snapshots_ < 10 * batches_.size())
      throw Error(ErrorCode::InsufficientData, "post-burn-in samples fewer than 10 per batch");
    return estimate_from_batches(batches_, c_grid_, burn_in_);
  }

 private:
  std::vector<std::size_t> sites_;
  double burn_in_;
  double end_;
  std::vector<double> c_grid_;
  std::vector<MarginalBatch> batches_;
  std::uint64_t snapshots_ = 0;
};

/// Time average over a stored trajectory; burn_in is a time offset from the
/// first sample's window start `start`.
inline StationaryEstimate estimate_stationary(const Trajectory& traj, const Domain& dom, double start, double end,
                                              double burn_in, std::size_t batch_count,
                                              const std::vector<double>& c_grid = {}) {
  TimeAverageEstimator est(dom, start + burn_in, end, batch_count, c_grid);
  for (std::size_t s = 0; s < traj.times.size(); ++s) est.observe(traj.times[s], traj.snapshots[s]);
  return est.estimate();
}

/// Replicate average: each independent replicate is its own batch.
inline StationaryEstimate estimate_stationary(const std::vector<QueueField>& replicates, const Domain& dom,
                                              const std::vector<double>& c_grid = {}) {
  if (replicates.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two replicates");
  const auto sites = pooled_sites(dom);
  std::vector<MarginalBatch> batches;
  for (const auto& f : replicates) {
    MarginalBatch b(c_grid.size());
    for (std::size_t i : sites) b.add(f.values[i], c_grid);
    batches.push_back(std::move(b));
  }
  return estimate_from_batches(batches, c_grid, 0.0);
}

struct TailFit {
  double c2 = 0.0;  // magnitude of the fitted log-CCDF slope
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual of log CCDF about the line
  std::size_t x_lo = 0;
  std::size_t x_hi = 0;
  bool exponential_like = true;
  std::vector<double> lower_witness;  // lambda^x over the fit range
  bool lower_witness_holds = true;
};

inline constexpr double kTailResidualFlag = 0.05;

/// 90th-percentile starting point for the tail fit.
inline std::size_t default_tail_xmin(const std::vector<double>& ccdf) {
  for (std::size_t x = 0; x + 1 < ccdf.size(); ++x)
    if (ccdf[x + 1] <= 0.1) return x;
  return ccdf.empty() ? 0 : ccdf.size() - 1;
}

/// Least squares of log CCDF on x over [x_min, last x with CCDF > 10 / n].
inline TailFit fit_tail(const std::vector<double>& ccdf, double sample_count, std::size_t x_min,
                        double lambda = -1.0) {
  const double floor = 10.0 / sample_count;
  std::size_t hi = x_min;
  while (hi < ccdf.size() && ccdf[hi] > floor) ++hi;
  if (hi < x_min + 4) throw Error(ErrorCode::TailTooShort, "fewer than 4 reliable CCDF points");
  TailFit fit;
  fit.x_lo = x_min;
  fit.x_hi = hi - 1;
  const double m = static_cast<double>(hi - x_min);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t x = x_min; x < hi; ++x) {
    const double xv = static_cast<double>(x), y = std::log(ccdf[x]);
    sx += xv;
    sy += y;
    sxx += xv * xv;
    sxy += xv * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - slope * sx) / m;
  fit.c2 = -slope;
  double rss = 0.0;
  for (std::size_t x = x_min; x < hi; ++x) {
    const double r = std::log(ccdf[x]) - (fit.intercept + slope * static_cast<double>(x));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / m);
  fit.exponential_like = fit.residual < kTailResidualFlag;
  if (lambda >= 0.0) {
    for (std::size_t x = x_min; x < hi; ++x) {
      const double w = std::pow(lambda, static_cast<double>(x));
      fit.lower_witness.push_back(w);
      if (ccdf[x] < w) fit.lower_witness_holds = false;
    }
  }
  return fit;
}

/// Translation-pooled covariance of X_0 and X_{n e_h} across replicates.
struct CovarianceProfile {
  std::vector<int> offsets;
  std::vector<double> covariance;
  std::vector<double> covariance_se;
  std::vector<double> product;  // E[X_0 X_{n e_h}]
  std::vector<double> product_se;
  double mean = 0.0;
  double mean_se = 0.0;
  std::size_t replicates = 0;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double replicate_se(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

/// Jackknife over replicates of E[A] - E[B] E[C].
inline std::pair<double, double> jackknife_cov(const std::vector<double>& a, const std::vector<double>& b,
                                               const std::vector<double>& c) {
  const std::size_t r = a.size();
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  const double sc = std::accumulate(c.begin(), c.end(), 0.0);
  const double rn = static_cast<double>(r);
  const double full = sa / rn - (sb / rn) * (sc / rn);
  std::vector<double> loo(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double d = rn - 1.0;
    loo[i] = (sa - a[i]) / d - ((sb - b[i]) / d) * ((sc - c[i]) / d);
  }
  const double m = mean_of(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - m) * (v - m);
  return {full, std::sqrt((rn - 1.0) / rn * ss)};
}

inline void check_offsets(const Domain& dom, int axis, const std::vector<int>& offsets) {
  if (!dom.wraps()) throw Error(ErrorCode::InvalidDomain, "spatial covariance needs a torus");
  if (axis < 0 || axis >= dom.dim()) throw Error(ErrorCode::InvalidDomain, "axis out of range");
  for (int n : offsets)
    if (2 * std::abs(n) >= dom.side()) throw Error(ErrorCode::OffsetTooLarge, "torus side must exceed 2 * offset");
}

inline std::size_t shifted(const Domain& dom, std::size_t i, int axis, int n) {
  Site off(dom.dim(), 0);
  off[axis] = -n;  // resolve gives i - offset
  return static_cast<std::size_t>(dom.resolve(i, off));
}

}  // namespace detail

inline CovarianceProfile spatial_covariance(const std::vector<QueueField>& replicates, const Domain& dom, int axis,
                                            const std::vector<int>& offsets) {
  detail::check_offsets(dom, axis, offsets);
  if (replicates.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two replicates");
  const auto sites = pooled_sites(dom);
  const double ns = static_cast<double>(sites.size());
  std::vector<double> means;
  for (const auto& f : replicates) {
    double s = 0.0;
    for (std::size_t i : sites) s += f.values[i];
    means.push_back(s / ns);
  }
  CovarianceProfile prof;
  prof.offsets = offsets;
  prof.replicates = replicates.size();
  prof.mean = detail::mean_of(means);
  prof.mean_se = detail::replicate_se(means);
  for (int n : offsets) {
    std::vector<double> prods;
    for (const auto& f : replicates) {
      double s = 0.0;
      for (std::size_t i : sites) s += static_cast<double>(f.values[i]) * f.values[detail::shifted(dom, i, axis, n)];
      prods.push_back(s / ns);
    }
    prof.product.push_back(detail::mean_of(prods));
    prof.product_se.push_back(detail::replicate_se(prods));
    auto [cov, se] = detail::jackknife_cov(prods, means, means);
    prof.covariance.push_back(cov);
    prof.covariance_se.push_back(se);
  }
  return prof;
}

/// Values on the K-window around a center, in Domain::window order.
using WindowFunctional = std::function<double(const std::vector<int>&)>;

struct FunctionalCorrelation {
  int offset = 0;
  double product = 0.0;  // E[f(W_0) g(W_{n e_h})]
  double mean_f = 0.0;
  double mean_g = 0.0;
  double covariance = 0.0;
  double covariance_se = 0.0;
};

/// Pooled over translations of the window pair across the torus.
inline std::vector<FunctionalCorrelation> window_functional_covariance(const std::vector<QueueField>& replicates,
                                                                       const Domain& dom, int K, int axis,
                                                                       const std::vector<int>& offsets,
                                                                       const WindowFunctional& f,
                                                                       const WindowFunctional& g) {
  detail::check_offsets(dom, axis, offsets);
  if (replicates.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two replicates");
  const auto sites = pooled_sites(dom);
  std::vector<std::vector<std::size_t>> windows;
  for (std::size_t i = 0; i < dom.site_count(); ++i) windows.push_back(dom.window(dom.site_of(i), K));
  auto eval = [&](const QueueField& fld, std::size_t center, const WindowFunctional& fn) {
    std::vector<int> w;
    for (std::size_t s : windows[center]) w.push_back(fld.values[s]);
    return fn(w);
  };
  const double ns = static_cast<double>(sites.size());
  std::vector<FunctionalCorrelation> out;
  for (int n : offsets) {
    std::vector<double> fg, fm, gm;
    for (const auto& fld : replicates) {
      double sfg = 0, sf = 0, sg = 0;
      for (std::size_t i : sites) {
        const double fv = eval(fld, i, f);
        const double gv = eval(fld, detail::shifted(dom, i, axis, n), g);
        sfg += fv * gv;
        sf += fv;
        sg += gv;
      }
      fg.push_back(sfg / ns);
      fm.push_back(sf / ns);
      gm.push_back(sg / ns);
    }
    FunctionalCorrelation fc;
    fc.offset = n;
    fc.product = detail::mean_of(fg);
    fc.mean_f = detail::mean_of(fm);
    fc.mean_g = detail::mean_of(gm);
    std::tie(fc.covariance, fc.covariance_se) = detail::jackknife_cov(fg, fm, gm);
    out.push_back(fc);
  }
  return out;
}

struct MaxScalingReport {
  std::vector<int> N;
  std::vector<int> maxima;
  double slope = 0.0;  // least squares of max on log N
  double intercept = 0.0;
  double C1 = 0.0;  // min over N of max / log N
  double C2 = 0.0;  // max over N of max / log N
  bool nondecreasing = true;
};

/// Least-squares slope and intercept of y on x.
inline std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = m * sxx - sx * sx;
  const double slope = den == 0.0 ? 0.0 : (m * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / m};
}

/// Maxima over the nested centred boxes ||i||_inf <= N (N >= 2).
inline MaxScalingReport max_in_boxes(const QueueField& field, const Domain& dom, std::vector<int> Ns) {
  std::sort(Ns.begin(), Ns.end());
  for (int N : Ns)
    if (N < 2 || N > dom.half_width()) throw Error(ErrorCode::InvalidDomain, "box radius must lie in [2, n]");
  MaxScalingReport rep;
  rep.N = Ns;
  std::vector<double> lx, my;
  rep.C1 = std::numeric_limits<double>::infinity();
  for (int N : Ns) {
    int mx = 0;
    for (std::size_t i = 0; i < dom.site_count(); ++i)
      if (linf_norm(dom.site_of(i)) <= N) mx = std::max(mx, field.values[i]);
    if (!rep.maxima.empty() && mx < rep.maxima.back()) rep.nondecreasing = false;
    rep.maxima.push_back(mx);
    const double l = std::log(static_cast<double>(N));
    lx.push_back(l);
    my.push_back(mx);
    rep.C1 = std::min(rep.C1, mx / l);
    rep.C2 = std::max(rep.C2, mx / l);
  }
  std::tie(rep.slope, rep.intercept) = least_squares(lx, my);
  return rep;
}

/// Read access to a field translated so that `center` becomes the origin.
class TranslatedField {
 public:
  TranslatedField(const Domain& dom, const QueueField& f, std::size_t center) : dom_(&dom), f_(&f), center_(center) {}

  /// X_{center + offset}, 0 outside a zero-padded box.
  int at(const Site& offset) const {
    Site neg(offset.size());
    for (std::size_t k = 0; k < offset.size(); ++k) neg[k] = -offset[k];
    const std::ptrdiff_t j = dom_->resolve(center_, neg);
    return j == kZeroSite ? 0 : f_->values[static_cast<std::size_t>(j)];
  }

  int value() const { return f_->values[center_]; }

 private:
  const Domain* dom_;
  const QueueField* f_;
  std::size_t center_;
};

using ShiftFunctional = std::function<double(const TranslatedField&)>;

struct ErgodicRow {
  int radius = 0;
  std::size_t count = 0;
  double average = 0.0;
  double se = 0.0;  // block means over slabs along axis 1
};

inline constexpr std::size_t kErgodicBlocks = 16;

/// Spatial averages of f over the boxes B_r = {||i||_inf <= r}.
inline std::vector<ErgodicRow> ergodic_average(const QueueField& field, const Domain& dom, std::vector<int> radii,
                                               const ShiftFunctional& f) {
  std::sort(radii.begin(), radii.end());
  std::vector<ErgodicRow> rows;
  for (int r : radii) {
    if (r < 0 || r > dom.half_width()) throw Error(ErrorCode::InvalidDomain, "box radius exceeds domain");
    ErgodicRow row;
    row.radius = r;
    const std::size_t side = 2 * static_cast<std::size_t>(r) + 1;
    const std::size_t nb = std::min(kErgodicBlocks, side);
    std::vector<double> bsum(nb, 0.0), bcnt(nb, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < dom.site_count(); ++i) {
      const Site s = dom.site_of(i);
      if (linf_norm(s) > r) continue;
      const double v = f(TranslatedField(dom, field, i));
      total += v;
      ++row.count;
      const std::size_t b = static_cast<std::size_t>(s[0] + r) * nb / side;
      bsum[b] += v;
      bcnt[b] += 1.0;
    }
    row.average = total / static_cast<double>(row.count);
    std::vector<double> bm;
    for (std::size_t b = 0; b < nb; ++b)
      if (bcnt[b] > 0) bm.push_back(bsum[b] / bcnt[b]);
    row.se = batch_means_se(bm);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace iqnet

#endif  // IQNET_STATISTICS_HPP
