#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "iqnet/oracle.hpp"
#include "iqnet/suite.hpp"

using namespace iqnet;

namespace {
const InterferenceKernel kNN = nearest_neighbor_kernel(1, 0.5);
}

TEST(Constants, Examples) {
  const auto b = compute_constants(0.25, 2.0);
  EXPECT_NEAR(b.D, 0.2, 1e-15);
  // W(0.2) from an independent Lambert-W evaluation
  EXPECT_NEAR(b.c0, 0.168915973499, 1e-11);
  const auto w = compute_constants(0.0, 1.0);
  EXPECT_DOUBLE_EQ(w.D, 1.0);
  EXPECT_NEAR(w.c0, 0.567143290410, 1e-11);
  EXPECT_DOUBLE_EQ(b.mgf_bound(0.0), 1.0);
  EXPECT_LT(b.mgf_bound(0.05), b.mgf_bound(0.1));
  EXPECT_THROW(compute_constants(0.5, 2.0), Error);
}

TEST(Constants, RootAccuracy) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const double sa = std::uniform_real_distribution<double>(1.0, 6.0)(rng);
    const double l = std::uniform_real_distribution<double>(0.0, 0.999)(rng) / sa;
    const auto b = compute_constants(l, sa);
    EXPECT_GT(b.D, 0.0);
    EXPECT_GT(b.c0, 0.0);
    EXPECT_NEAR(b.c0 * std::exp(b.c0), b.D, 1e-10);
  }
}

TEST(RatioInequality, ConstantSequenceIsEquality) {
  const auto dom = Domain::torus(1, 4);
  for (int j = 1; j <= 3; ++j) {
    const auto r = check_ratio_inequality(dom, std::vector<double>(9, 3.0), kNN, j);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.slack, 0.0, 1e-12 * std::pow(3.0, j) * 9);
  }
}

TEST(RatioInequality, HandExample) {
  const auto r = check_ratio_inequality(Domain::torus(1, 1), {2, 1, 1}, kNN, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.slack, 32.0 / 15.0 - 2.0, 1e-14);
}

TEST(RatioInequality, ZeroSequence) {
  const auto r = check_ratio_inequality(Domain::torus(1, 2), std::vector<double>(5, 0.0), kNN, 2);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.slack, 0.0);
}

TEST(RatioInequality, RandomInstances) {
  std::mt19937_64 rng(99);
  int failures = 0;
  for (int t = 0; t < 2000; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 16)(rng);
    const auto dom = Domain::torus(1, n);
    const auto k = random_kernel(1, std::min(n, 4), rng);
    std::vector<double> y(dom.site_count());
    for (auto& v : y) v = std::uniform_int_distribution<int>(0, 20)(rng);
    if (!check_ratio_inequality(dom, y, k, 1 + t % 3).pass) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(RatioInequality, RequiresTorus) {
  EXPECT_THROW(check_ratio_inequality(Domain::zero_box(1, 1), {1, 1, 1}, kNN, 1), Error);
}

TEST(MomentRecursion, Examples) {
  const auto r = check_moment_recursion({1.0, 0.4}, 0.2, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.slack, 1.0 - 0.16, 1e-15);
  // k = 1 reduces to mu_1 <= 1 / (2 D)
  EXPECT_TRUE(check_moment_recursion({1.0, 2.5}, 0.2, 1).pass);
  EXPECT_FALSE(check_moment_recursion({1.0, 2.5 + 1e-6}, 0.2, 1).pass);
  EXPECT_THROW(check_moment_recursion({0.9, 0.1}, 0.2, 1), Error);
}

TEST(MomentRecursion, OracleThreeSiteTorus) {
  const auto b = compute_constants(0.2, 2.0);
  const auto o = solve_oracle(Domain::torus(1, 1), kNN, 0.2, 30);
  for (int k = 1; k <= 5; ++k) {
    const auto r = check_moment_recursion(o.moments, b.D, k);
    EXPECT_TRUE(r.pass) << k;
    EXPECT_GT(r.slack, 0.0) << k;
  }
}

TEST(MgfBound, Examples) {
  const auto b = compute_constants(0.2, 2.0);
  const auto r0 = check_mgf_bound(1.0, 0.0, b);
  EXPECT_TRUE(r0.pass);
  EXPECT_DOUBLE_EQ(r0.slack, 0.0);
  const auto o = solve_oracle(Domain::torus(1, 1), kNN, 0.2, 30, {1, {b.c0 / 2}});
  const auto r = check_mgf_bound(o.mgf[0], b.c0 / 2, b);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.slack, 0.0);
  EXPECT_THROW(check_mgf_bound(1.0, b.c0, b), Error);
}

TEST(MgfBound, SimulatedTorusWithinSe) {
  const auto b = compute_constants(0.3, 2.0);
  const Domain dom = Domain::torus(1, 16);
  const auto est = forward_stationary_estimate(dom, kNN, 0.3, 2e4, 2e3, 1.0, 32, {b.c0 / 2}, 3);
  EXPECT_TRUE(check_mgf_bound(est.mgf[0], b.c0 / 2, b, 3 * est.mgf_se[0]).pass);
}

TEST(MeanFormula, Targets) {
  EXPECT_NEAR(stationary_mean_target(0.2, 2.0), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(stationary_mean_target(0.5, 1.0), 1.0);
  EXPECT_NEAR(stationary_mean_target(0.4, 2.0), 2.0, 1e-14);
  EXPECT_THROW(stationary_mean_target(0.5, 2.0), Error);
  const auto r = check_mean_formula(2.03, 0.001, 0.4, 2.0);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.notes.empty());
  EXPECT_FALSE(check_mean_formula(2.1, 0.001, 0.4, 2.0).pass);
}

TEST(TailSandwich, ExactGeometricTightBelow) {
  const double lambda = 0.4;
  const auto b = compute_constants(lambda, 1.0);
  std::vector<double> ccdf;
  for (int x = 0; x < 40; ++x) ccdf.push_back(std::pow(lambda, x));
  const auto r = tail_sandwich_check(ccdf, {}, b, b.c0 / 2, 0, 40);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.slack, 0.0, 1e-15);
}

TEST(TailSandwich, OracleThreeSiteTorus) {
  const auto b = compute_constants(0.2, 2.0);
  const auto o = solve_oracle(Domain::torus(1, 1), kNN, 0.2, 20);
  EXPECT_TRUE(tail_sandwich_check(o.ccdf, {}, b, b.c0 / 2, 0, 11).pass);
}

TEST(TailSandwich, ZeroPoint) {
  const auto b = compute_constants(0.2, 2.0);
  EXPECT_TRUE(tail_sandwich_check({1.0}, {0.0}, b, b.c0 / 2, 0, 1).pass);
  EXPECT_THROW(tail_sandwich_check({1.0}, {}, b, b.c0 * 1.01, 0, 1), Error);
}

TEST(FrozenStrip, ConstructedViolationFailsStructure) {
  const int n = 64, L = 5;
  const auto wide = make_kernel(1, {{{0}, 1.0}, {{1}, 0.5}, {{-1}, 0.5}, {{12}, 0.1}, {{-12}, 0.1}});
  FrozenStripOptions opt;
  opt.truncate = false;
  opt.replicates = 20;
  const auto rep = frozen_strip_experiment(n, FrozenStripSchedule::constant(L), wide, 0.1, 1, opt);
  EXPECT_FALSE(rep.structural.pass);
  EXPECT_FALSE(rep.combined.pass);
}

TEST(FrozenStrip, ZeroRateTriviallyIndependent) {
  FrozenStripOptions opt;
  opt.replicates = 50;
  opt.K = 2;
  const auto rep = frozen_strip_experiment(64, FrozenStripSchedule{}, kNN, 0.0, 1, opt);
  EXPECT_TRUE(rep.structural.pass);
  EXPECT_DOUBLE_EQ(rep.correlation_estimate, 0.0);
  EXPECT_DOUBLE_EQ(rep.pooled_tv, 0.0);
  EXPECT_TRUE(rep.combined.pass);
}

TEST(FrozenStrip, DomainTooSmall) {
  EXPECT_THROW(frozen_strip_experiment(7, FrozenStripSchedule::constant(3), kNN, 0.2, 1), Error);
}

TEST(FrozenStrip, ValidFixtureShortRun) {
  FrozenStripOptions opt;
  opt.replicates = 300;
  const auto rep = frozen_strip_experiment(64, FrozenStripSchedule{}, kNN, 0.2, 7, opt);
  EXPECT_EQ(rep.L_n, 5);
  EXPECT_TRUE(rep.structural.pass);
  EXPECT_TRUE(rep.correlation.pass);
  EXPECT_EQ(rep.stabilized_runs, 300u);
}

TEST(CheckReport, DigestAndJson) {
  const auto a = make_report("x", "inputs", 0.1);
  const auto b = make_report("x", "inputs", -0.1);
  EXPECT_EQ(a.inputs_digest, b.inputs_digest);
  EXPECT_NE(a.inputs_digest, make_report("x", "other", 0.1).inputs_digest);
  EXPECT_TRUE(a.pass);
  EXPECT_FALSE(b.pass);
  EXPECT_TRUE(make_report("x", "", -1e-10).pass);
  const auto j = report_to_json(a);
  EXPECT_EQ(j.at("name"), "x");
  EXPECT_EQ(j.at("pass"), true);
}

TEST(VerifySuite, AllPass) {
  for (const auto& r : run_verify_suite(0)) EXPECT_TRUE(r.pass) << r.name << " slack " << r.slack;
}
