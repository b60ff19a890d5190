#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "iqnet/kernel.hpp"
#include "iqnet/lattice.hpp"

using namespace iqnet;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no iqnet::Error thrown";
  return ErrorCode::IoError;
}

InterferenceKernel nn() { return make_kernel(1, {{{-1}, 0.5}, {{0}, 1.0}, {{1}, 0.5}}); }

}  // namespace

TEST(MakeKernel, IdentityKernel) {
  const auto k = make_kernel(1, {{{0}, 1.0}});
  EXPECT_DOUBLE_EQ(k.sum(), 1.0);
  EXPECT_EQ(k.radius(), 0);
}

TEST(MakeKernel, NearestNeighbour) {
  const auto k = nn();
  EXPECT_DOUBLE_EQ(k.sum(), 2.0);
  EXPECT_EQ(k.radius(), 1);
  EXPECT_DOUBLE_EQ(k.weight({-1}), 0.5);
  EXPECT_DOUBLE_EQ(k.weight({3}), 0.0);
  EXPECT_DOUBLE_EQ(k.critical_rate(), 0.5);
  EXPECT_EQ(k, nearest_neighbor_kernel(1, 0.5));
}

TEST(MakeKernel, Rejections) {
  EXPECT_EQ(code_of([] { make_kernel(1, {{{0}, 1.0}, {{1}, 0.5}}); }), ErrorCode::AsymmetricKernel);
  EXPECT_EQ(code_of([] { make_kernel(1, {{{1}, 0.5}, {{-1}, 0.5}}); }), ErrorCode::MissingCenter);
  EXPECT_EQ(code_of([] { make_kernel(1, {{{0}, 2.0}}); }), ErrorCode::MissingCenter);
  EXPECT_EQ(code_of([] { make_kernel(1, {{{0}, 1.0}, {{1}, -0.5}, {{-1}, -0.5}}); }), ErrorCode::NegativeWeight);
  EXPECT_EQ(code_of([] { make_kernel(2, {{{0}, 1.0}}); }), ErrorCode::ValidationError);
}

TEST(TruncateKernel, Examples) {
  const auto k = nn();
  const auto k0 = truncate_kernel(k, 0);
  EXPECT_EQ(k0.entries().size(), 1u);
  EXPECT_DOUBLE_EQ(k0.sum(), 1.0);
  EXPECT_EQ(truncate_kernel(k, 1), k);
}

TEST(TruncateKernel, TwoDimensionalRemovesOuterShell) {
  std::vector<InterferenceKernel::Entry> e{{{0, 0}, 1.0}};
  for (auto off : std::vector<Site>{{1, 0}, {0, 1}}) {
    e.push_back({off, 0.3});
    e.push_back({{-off[0], -off[1]}, 0.3});
  }
  for (auto off : std::vector<Site>{{2, 0}, {2, 1}, {0, 2}}) {
    e.push_back({off, 0.1});
    e.push_back({{-off[0], -off[1]}, 0.1});
  }
  const auto k = make_kernel(2, e);
  const auto t = truncate_kernel(k, 1);
  EXPECT_EQ(t.radius(), 1);
  EXPECT_NEAR(k.sum() - t.sum(), 0.6, 1e-15);
}

TEST(TruncateKernel, Properties) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<InterferenceKernel::Entry> e{{{0}, 1.0}};
    const int r = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int i = 1; i <= r; ++i) {
      const double w = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      e.push_back({{i}, w});
      e.push_back({{-i}, w});
    }
    const auto k = make_kernel(1, e);
    EXPECT_EQ(truncate_kernel(k, k.radius()), k);
    double prev = k.sum();
    for (int L = k.radius(); L >= 0; --L) {
      const double s = truncate_kernel(k, L).sum();
      EXPECT_LE(s, prev);
      prev = s;
    }
    EXPECT_DOUBLE_EQ(truncate_kernel(k, 0).sum(), 1.0);
  }
}

TEST(KernelJson, RoundTripAndUnknownKey) {
  const auto k = nn();
  EXPECT_EQ(kernel_from_json(kernel_to_json(k)), k);
  auto j = kernel_to_json(k);
  j["extra"] = 1;
  EXPECT_EQ(code_of([&] { kernel_from_json(j); }), ErrorCode::ValidationError);
}

TEST(Domain, SiteCount) {
  EXPECT_EQ(Domain::torus(1, 2).site_count(), 5u);
  EXPECT_EQ(Domain::torus(2, 3).site_count(), 49u);
  EXPECT_EQ(Domain::zero_box(3, 1).site_count(), 27u);
}

TEST(Domain, IndexRoundTrip) {
  const auto d = Domain::torus(2, 3);
  for (std::size_t i = 0; i < d.site_count(); ++i) EXPECT_EQ(d.index_of(d.site_of(i)), i);
  EXPECT_EQ(d.site_of(d.origin()), (Site{0, 0}));
}

TEST(ResolveSite, Examples) {
  EXPECT_EQ(resolve_site(Domain::torus(1, 2), {2}, {-1}), (Site{-2}));
  EXPECT_FALSE(resolve_site(Domain::zero_box(1, 2), {2}, {-1}).has_value());
  EXPECT_EQ(resolve_site(Domain::torus(2, 3), {3, 0}, {-1, 0}), (Site{-3, 0}));
}

TEST(ResolveSite, TorusBijection) {
  const auto d = Domain::torus(2, 2);
  for (const Site& off : std::vector<Site>{{0, 0}, {1, 0}, {-2, 1}, {3, -4}, {5, 5}}) {
    std::set<std::size_t> image;
    for (std::size_t i = 0; i < d.site_count(); ++i) image.insert(static_cast<std::size_t>(d.resolve(i, off)));
    EXPECT_EQ(image.size(), d.site_count());
  }
}

TEST(Domain, FrozenStripLayout) {
  const int n = 64, L = 5;
  const auto d = Domain::frozen_strip(1, n, L);
  EXPECT_EQ(FrozenStripSchedule{}(n), L);
  for (int z = n / 2 - L; z <= (n + 1) / 2 + L; ++z) EXPECT_TRUE(d.is_frozen(d.index_of({z}))) << z;
  EXPECT_FALSE(d.is_frozen(d.index_of({n / 2 - L - 1})));
  EXPECT_FALSE(d.is_frozen(d.index_of({(n + 1) / 2 + L + 1})));
  EXPECT_FALSE(d.is_frozen(d.origin()));
  EXPECT_FALSE(d.is_frozen(d.index_of({n})));
  for (std::size_t i = 0; i < d.site_count(); ++i) {
    EXPECT_EQ(d.arrivals_allowed(i), !d.is_frozen(i));
    // mirror z -> n - z keeps the frozen set
    const int z = d.site_of(i)[0];
    EXPECT_EQ(d.is_frozen(i), d.is_frozen(d.index_of({d.wrap(n - z)})));
  }
  EXPECT_TRUE(d.wraps());
}

TEST(Domain, FrozenStripOddSide) {
  const auto d = Domain::frozen_strip(2, 9, 1);
  for (std::size_t i = 0; i < d.site_count(); ++i) {
    const Site s = d.site_of(i);
    const bool band = s[0] >= 3 && s[0] <= 6;
    if (band) {
      EXPECT_TRUE(d.is_frozen(i));
    }
    EXPECT_EQ(d.is_frozen(i), d.is_frozen(d.index_of({d.wrap(9 - s[0]), s[1]})));
  }
}

TEST(Domain, WindowWraps) {
  const auto d = Domain::torus(1, 3);
  const auto w = d.window({3}, 1);
  std::set<int> got;
  for (auto i : w) got.insert(d.site_of(i)[0]);
  EXPECT_EQ(got, (std::set<int>{2, 3, -3}));
}

TEST(Domain, InvalidInputs) {
  EXPECT_EQ(code_of([] { Domain::torus(0, 3); }), ErrorCode::InvalidDomain);
  EXPECT_EQ(code_of([] { Domain::torus(1, -1); }), ErrorCode::InvalidDomain);
  EXPECT_EQ(boundary_from_string(to_string(Boundary::ZeroBox)), Boundary::ZeroBox);
  EXPECT_EQ(code_of([] { boundary_from_string("klein"); }), ErrorCode::ValidationError);
}
