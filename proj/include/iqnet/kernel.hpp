#ifndef IQNET_KERNEL_HPP
#define IQNET_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iqnet/error.hpp"
#include "iqnet/lattice.hpp"

namespace iqnet {

/// Symmetric nonnegative interference weights with a_0 = 1 and finite support.
class InterferenceKernel {
 public:
  using Entry = std::pair<Site, double>;

  InterferenceKernel() = default;

  int dim() const noexcept { return dim_; }
  double sum() const noexcept { return sum_; }
  int radius() const noexcept { return radius_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  double weight(const Site& offset) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), offset,
                               [](const Entry& e, const Site& o) { return e.first < o; });
    return (it != entries_.end() && it->first == offset) ? it->second : 0.0;
  }

  /// Largest arrival rate for which the infinite-lattice dynamics is stable.
  double critical_rate() const { return 1.0 / sum_; }

  friend bool operator==(const InterferenceKernel&, const InterferenceKernel&) = default;

 private:
  friend InterferenceKernel make_kernel(int dim, const std::vector<Entry>& entries);
  friend InterferenceKernel truncate_kernel(const InterferenceKernel& k, int L);

  void finalize() {
    std::sort(entries_.begin(), entries_.end());
    sum_ = 0.0;
    radius_ = 0;
    for (const auto& [off, w] : entries_) {
      sum_ += w;
      radius_ = std::max(radius_, linf_norm(off));
    }
  }

  int dim_ = 1;
  std::vector<Entry> entries_;
  double sum_ = 1.0;
  int radius_ = 0;
};

/// Validates and builds a kernel. Zero weights are dropped from the support.
inline InterferenceKernel make_kernel(int dim, const std::vector<InterferenceKernel::Entry>& entries) {
  if (dim < 1) throw Error(ErrorCode::ValidationError, "kernel dimension must be positive");
  std::map<Site, double> m;
  for (const auto& [off, w] : entries) {
    if (static_cast<int>(off.size()) != dim)
      throw Error(ErrorCode::ValidationError, "kernel offset has wrong dimension");
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::NegativeWeight, "weights must be finite and >= 0");
    if (m.count(off)) throw Error(ErrorCode::ValidationError, "duplicate kernel offset");
    m[off] = w;
  }
  const Site zero(dim, 0);
  auto c = m.find(zero);
  if (c == m.end() || c->second != 1.0) throw Error(ErrorCode::MissingCenter, "a_0 must be present and equal 1");
  for (const auto& [off, w] : m) {
    Site neg(off.size());
    for (std::size_t k = 0; k < off.size(); ++k) neg[k] = -off[k];
    auto it = m.find(neg);
    const double wn = it == m.end() ? 0.0 : it->second;
    if (wn != w) throw Error(ErrorCode::AsymmetricKernel, "a_i != a_{-i}");
  }
  InterferenceKernel k;
  k.dim_ = dim;
  for (const auto& [off, w] : m)
    if (w > 0.0) k.entries_.emplace_back(off, w);
  k.finalize();
  return k;
}

/// Drops every weight outside the infinity-ball of radius L.
inline InterferenceKernel truncate_kernel(const InterferenceKernel& k, int L) {
  InterferenceKernel out;
  out.dim_ = k.dim_;
  for (const auto& e : k.entries_)
    if (linf_norm(e.first) <= std::max(L, 0)) out.entries_.push_back(e);
  out.finalize();
  return out;
}

/// Nearest-neighbour kernel along every axis with weight w: a_{+-e_h} = w.
inline InterferenceKernel nearest_neighbor_kernel(int dim, double w) {
  std::vector<InterferenceKernel::Entry> e{{Site(dim, 0), 1.0}};
  for (int h = 0; h < dim; ++h) {
    Site p(dim, 0), q(dim, 0);
    p[h] = 1;
    q[h] = -1;
    e.emplace_back(p, w);
    e.emplace_back(q, w);
  }
  return make_kernel(dim, e);
}

inline nlohmann::json kernel_to_json(const InterferenceKernel& k) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [off, w] : k.entries()) {
    nlohmann::json row = nlohmann::json::array();
    for (int c : off) row.push_back(c);
    row.push_back(w);
    entries.push_back(row);
  }
  return {{"dim", k.dim()}, {"entries", entries}};
}

/// Parses {"dim": d, "entries": [[offset..., weight], ...]}.
inline InterferenceKernel kernel_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
    throw Error(ErrorCode::ValidationError, "kernel: expected {\"dim\", \"entries\"}");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "dim" && it.key() != "entries")
      throw Error(ErrorCode::ValidationError, "kernel." + it.key() + ": unknown key");
  const int dim = j.at("dim").get<int>();
  std::vector<InterferenceKernel::Entry> entries;
  for (const auto& row : j.at("entries")) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim + 1)
      throw Error(ErrorCode::ValidationError, "kernel.entries: each row needs dim offsets plus a weight");
    Site off(dim);
    for (int k = 0; k < dim; ++k) off[k] = row[k].get<int>();
    entries.emplace_back(off, row[dim].get<double>());
  }
  return make_kernel(dim, entries);
}

}  // namespace iqnet

#endif  // IQNET_KERNEL_HPP
