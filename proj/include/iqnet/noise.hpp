#ifndef IQNET_NOISE_HPP
#define IQNET_NOISE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "iqnet/error.hpp"
#include "iqnet/lattice.hpp"

namespace iqnet {

inline constexpr double kDefaultSlabWidth = 16.0;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// xoshiro256++ seeded through splitmix64. Small, fast and reproducible.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    for (auto& w : s_) {
      seed = splitmix64(seed);
      w = seed;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double open_uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(open_uniform()) / rate; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

enum class StreamKind : std::uint8_t { Arrival = 0, Departure = 1 };

struct NoiseKey {
  std::uint64_t seed = 0;
  Site site;
  std::int64_t slab_index = 0;
  StreamKind kind = StreamKind::Arrival;

  std::uint64_t hash() const {
    std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(site.size()));
    for (int c : site) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
    h = splitmix64(h ^ static_cast<std::uint64_t>(slab_index));
    return splitmix64(h ^ (static_cast<std::uint64_t>(kind) + 0x3c6ef372fe94f82bULL));
  }
};

struct Departure {
  double time;
  double mark;
  friend bool operator==(const Departure&, const Departure&) = default;
};

/// One key's realization on [t0, t0 + width). Only the list matching the
/// key's stream kind is populated.
struct NoiseSlab {
  double t0 = 0.0;
  double width = kDefaultSlabWidth;
  std::vector<double> arrivals;
  std::vector<Departure> departures;
  friend bool operator==(const NoiseSlab&, const NoiseSlab&) = default;
};

/// Arrival keys produce a PPP of intensity lambda; departure keys a unit-rate
/// PPP with uniform marks in (0, 1). The slab window is
/// [slab_index * width, (slab_index + 1) * width).
inline NoiseSlab generate_slab(const NoiseKey& key, double lambda, double width = kDefaultSlabWidth) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::ValidationError, "arrival rate must be >= 0");
  if (!(width > 0.0)) throw Error(ErrorCode::ValidationError, "slab width must be > 0");
  NoiseSlab slab;
  slab.t0 = static_cast<double>(key.slab_index) * width;
  slab.width = width;
  const double end = slab.t0 + width;
  Xoshiro256 rng(key.hash());
  if (key.kind == StreamKind::Arrival) {
    if (lambda == 0.0) return slab;
    for (double t = slab.t0 + rng.exponential(lambda); t < end; t += rng.exponential(lambda))
      slab.arrivals.push_back(t);
  } else {
    for (double t = slab.t0 + rng.exponential(1.0); t < end; t += rng.exponential(1.0))
      slab.departures.push_back({t, rng.open_uniform()});
  }
  return slab;
}

enum class EventKind : std::uint8_t { Arrival = 0, Departure = 1 };

struct Event {
  double time;
  std::uint32_t site;
  EventKind kind;
  double mark;  // departure mark; 0 for arrivals

  friend bool operator==(const Event&, const Event&) = default;
  friend bool operator<(const Event& a, const Event& b) {
    return std::tie(a.time, a.site, a.kind) < std::tie(b.time, b.site, b.kind);
  }
};

/// Time-ordered merge of every site's slabs over [start, end). Generates one
/// slab layer at a time, so memory stays proportional to the domain size.
class EventStream {
 public:
  EventStream(const Domain& dom, std::uint64_t seed, double lambda, double start, double end,
              double slab_width = kDefaultSlabWidth, bool respect_mask = true)
      : dom_(&dom), seed_(seed), lambda_(lambda), start_(start), end_(end), width_(slab_width),
        respect_mask_(respect_mask) {
    if (!(slab_width > 0.0)) throw Error(ErrorCode::ValidationError, "slab width must be > 0");
    if (end > start) {
      slab_ = static_cast<std::int64_t>(std::floor(start / width_));
      last_slab_ = static_cast<std::int64_t>(std::ceil(end / width_)) - 1;
    } else {
      slab_ = 1;
      last_slab_ = 0;
    }
    sites_.reserve(dom.site_count());
    for (std::size_t i = 0; i < dom.site_count(); ++i) sites_.push_back(dom.site_of(i));
  }

  bool next(Event& out) {
    while (pos_ >= buffer_.size()) {
      if (slab_ > last_slab_) return false;
      fill(slab_++);
    }
    out = buffer_[pos_++];
    return true;
  }

  std::vector<Event> collect() {
    std::vector<Event> all;
    Event e;
    while (next(e)) all.push_back(e);
    return all;
  }

 private:
  void fill(std::int64_t slab) {
    buffer_.clear();
    pos_ = 0;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      const auto site = static_cast<std::uint32_t>(i);
      if (!respect_mask_ || dom_->arrivals_allowed(i)) {
        const NoiseSlab a = generate_slab({seed_, sites_[i], slab, StreamKind::Arrival}, lambda_, width_);
        for (double t : a.arrivals)
          if (t >= start_ && t < end_) buffer_.push_back({t, site, EventKind::Arrival, 0.0});
      }
      const NoiseSlab d = generate_slab({seed_, sites_[i], slab, StreamKind::Departure}, lambda_, width_);
      for (const auto& dep : d.departures)
        if (dep.time >= start_ && dep.time < end_) buffer_.push_back({dep.time, site, EventKind::Departure, dep.mark});
    }
    std::sort(buffer_.begin(), buffer_.end());
  }

  const Domain* dom_;
  std::uint64_t seed_;
  double lambda_;
  double start_;
  double end_;
  double width_;
  bool respect_mask_;
  std::int64_t slab_ = 0;
  std::int64_t last_slab_ = -1;
  std::vector<Site> sites_;
  std::vector<Event> buffer_;
  std::size_t pos_ = 0;
};

inline std::vector<Event> merged_event_stream(const Domain& dom, std::uint64_t seed, double lambda, double start,
                                              double end, double slab_width = kDefaultSlabWidth) {
  return EventStream(dom, seed, lambda, start, end, slab_width).collect();
}

/// Seed from the IQNET_SEED environment variable (decimal 64-bit), if set.
inline std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("IQNET_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* endp = nullptr;
  const unsigned long long s = std::strtoull(v, &endp, 10);
  if (endp == nullptr || *endp != '\0') throw Error(ErrorCode::ValidationError, "IQNET_SEED must be a decimal integer");
  return static_cast<std::uint64_t>(s);
}

}  // namespace iqnet

#endif  // IQNET_NOISE_HPP
