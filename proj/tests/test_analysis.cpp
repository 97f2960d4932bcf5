#include "algdich/analysis.hpp"
#include "algdich/scenarios.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace algdich;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<double> halvings(int count) {
  std::vector<double> out;
  for (int k = 1; k <= count; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

}  // namespace

TEST(SuiteResult, PassTracksWorstResidual) {
  SuiteResult s("demo", 1.0);
  s.add(0.0, {1.0}, 0.5);
  EXPECT_TRUE(s.pass);
  s.add(1.0, {2.0}, 1.5);
  EXPECT_FALSE(s.pass);
  EXPECT_EQ(s.samples, 2u);
  EXPECT_DOUBLE_EQ(s.worst_residual, 1.5);
  EXPECT_FALSE(s.details.back().pass);
  std::ostringstream os;
  const std::vector<SuiteResult> all{s};
  write_csv(os, all);
  EXPECT_EQ(os.str(), "suite,t,inputs,residual,bound,pass\n"
                      "demo,0,\"1\",0.5,1,true\n"
                      "demo,1,\"2\",1.5,1,false\n");
}

TEST(ConjugacyResidual, ZeroPerturbationIsExact) {
  const auto pr = section5(1, 1, 0.0).problem();
  const std::vector<InitialCondition> ics{{0.0, vec({0.3, -0.2})}};
  const std::vector<double> grid{-2.0, 0.0, 2.0};
  const auto r = conjugacy_residual_suite(pr, ics, grid);
  EXPECT_TRUE(r.pass());
  // H = identity, so the residual is the difference of two integrations of
  // the same linear system.
  EXPECT_LE(r.forward.worst_residual, 1e-8);
  EXPECT_LE(r.inverse.worst_residual, 1e-8);
  EXPECT_EQ(r.forward.samples, 3u);
}

TEST(ConjugacyResidual, ScalarOracle) {
  // T(t, t0) amplifies quadrature errors by up to e^4 on this grid, so the
  // 1e-8 oracle tolerance needs tight quadrature.
  ProblemOptions tight;
  tight.quad.tail_tol = tight.quad.panel_tol = 1e-12;
  tight.picard.quad_tol = 1e-12;
  const auto pr = scalar_oracle(1.0, 0.5).problem(tight);
  const std::vector<InitialCondition> ics{{0.0, vec({2.0})}, {1.0, vec({-2.0})}};
  const std::vector<double> grid{-3.0, -1.0, 0.5, 3.0};
  const auto r = conjugacy_residual_suite(pr, ics, grid, {1e-8, 1e-8});
  EXPECT_TRUE(r.pass()) << r.forward.worst_residual << " " << r.inverse.worst_residual;
}

TEST(ConjugacyResidual, Section5SingleCondition) {
  const auto pr = section5(1, 1, 0.05).problem();
  const std::vector<InitialCondition> ics{{0.0, vec({-0.2, -0.7})}};
  const std::vector<double> grid{-1.0, 1.0};
  const auto r = conjugacy_residual_suite(pr, ics, grid);
  EXPECT_TRUE(r.pass()) << r.forward.worst_residual << " " << r.inverse.worst_residual;
}

TEST(Roundtrip, ScalarOracleAndIdentity) {
  const std::vector<TimedState> pts{{0.0, vec({1.0})}, {2.0, vec({-1.5})}};
  const auto r = roundtrip_suite(scalar_oracle(1.0, 0.5).problem(), pts, 1e-5);
  EXPECT_TRUE(r.pass()) << r.forward.worst_residual << " " << r.inverse.worst_residual;
  const std::vector<TimedState> pts2{{0.0, vec({1.0, 2.0})}};
  const auto z = roundtrip_suite(section5(1, 1, 0.0).problem(), pts2);
  EXPECT_EQ(z.forward.worst_residual, 0.0);
  EXPECT_EQ(z.inverse.worst_residual, 0.0);
}

TEST(BoundSuite, ScalarDisplacementIsExactlyC) {
  // a = 2, c = 1: |H - x| = c/a = 0.5 <= 2K beta/alpha = 1.
  const auto pr = scalar_oracle(2.0, 1.0).problem();
  const std::vector<TimedState> pts{{0.0, vec({0.0})}, {-1.0, vec({3.0})}};
  const auto r = bound_suite(pr, pts);
  EXPECT_TRUE(r.pass());
  EXPECT_NEAR(r.forward.worst_residual, 0.5, 1e-6);
  EXPECT_NEAR(r.inverse.worst_residual, 0.5, 1e-5);
  EXPECT_DOUBLE_EQ(r.forward.bound_used, 1.0 + 1e-3);
}

TEST(HolderSuite, ScalarOracleIsIsometry) {
  const auto pr = scalar_oracle(1.0, 0.5).problem();
  const auto scales = halvings(6);
  const auto r = holder_suite(pr, 0.0, vec({0.3}), vec({1.0}), scales);
  EXPECT_TRUE(r.pass());
  ASSERT_TRUE(r.forward.exponent.has_value());
  EXPECT_NEAR(*r.forward.exponent, 1.0, 1e-6);
  EXPECT_NEAR(*r.forward.prefactor, 1.0, 1e-5);
  ASSERT_TRUE(r.inverse.has_value());
  EXPECT_NEAR(*r.inverse->exponent, 1.0, 1e-4);
}

TEST(HolderSuite, IdentityMapHasUnitExponent) {
  const auto sc = section5(1, 1, 0.0);
  const auto pr = sc.problem();
  // H is the identity: d_k = s_k, the fit is exact; gamma = 0 gives q = 0.
  const auto r = holder_suite(pr, 0.0, vec({0.0, 0.0}), vec({0.0, 1.0}), halvings(5));
  EXPECT_TRUE(r.pass());
  EXPECT_NEAR(*r.forward.exponent, 1.0, 1e-12);
}

TEST(HolderSuite, Preconditions) {
  const auto pr = scalar_oracle(1.0, 0.5).problem();
  EXPECT_THROW(holder_suite(pr, 0.0, vec({0.0}), vec({1.0}), halvings(4)), PreconditionError);
  EXPECT_THROW(holder_suite(pr, 0.0, vec({0.0}), vec({2.0}), halvings(5)), PreconditionError);
  const std::vector<double> up{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_THROW(holder_suite(pr, 0.0, vec({0.0}), vec({1.0}), up), PreconditionError);
}

TEST(LogLogFit, RecoversPowerLaw) {
  const std::vector<double> s{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> d;
  for (double x : s) d.push_back(3.0 * std::pow(x, 0.4));
  const auto f = detail::log_log_fit(s, d);
  ASSERT_TRUE(f.has_value());
  EXPECT_NEAR(f->first, 0.4, 1e-12);
  EXPECT_NEAR(f->second, 3.0, 1e-12);
  d[2] = 0.0;
  EXPECT_FALSE(detail::log_log_fit(s, d).has_value());
}

TEST(BoundedSolutionProbe, DiagonalExample) {
  const auto sc = example_2_2(1, 1, rates::exponential());
  EvolutionCache cache(sc.system, sc.working);
  // Stable component grows backward like e^{-t}: crosses 10 at t = -ln 10.
  const auto a = no_bounded_solution_probe(cache, sc.spec, vec({1.0, 0.0}), 5.0, 10.0);
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.direction, -1);
  EXPECT_NEAR(*a.observed_crossing, -std::log(10.0), 0.011);
  EXPECT_NEAR(*a.predicted_crossing, -std::log(10.0), 0.011);
  const auto b = no_bounded_solution_probe(cache, sc.spec, vec({0.0, 1.0}), 5.0, 10.0);
  EXPECT_TRUE(b.pass);
  EXPECT_EQ(b.direction, 1);
  const auto c = no_bounded_solution_probe(cache, sc.spec, vec({1.0, 1.0}), 5.0, 10.0);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.direction, -1);
  EXPECT_LE(c.worst_bound_ratio, 1.0);
}

TEST(BoundedSolutionProbe, ShortHorizonDoesNotCross) {
  const auto sc = example_2_2(1, 1, rates::exponential());
  EvolutionCache cache(sc.system, sc.working);
  const auto r = no_bounded_solution_probe(cache, sc.spec, vec({1.0, 0.0}), 1.0, 10.0);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.observed_crossing.has_value());
}

TEST(BoundedSolutionProbe, RejectsZeroVector) {
  const auto sc = example_2_2(1, 1, rates::exponential());
  EvolutionCache cache(sc.system, sc.working);
  EXPECT_THROW(no_bounded_solution_probe(cache, sc.spec, vec({0.0, 0.0}), 5.0, 10.0),
               PreconditionError);
}
