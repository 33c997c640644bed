#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "random_spec.hpp"
#include "stealth_lqr/analysis.hpp"
#include "stealth_lqr/presets.hpp"
#include "stealth_lqr/search.hpp"

using namespace stealth_lqr;
using stealth_lqr::test_support::random_spec;

namespace {

Model reference(double lambda) { return validate_spec(presets::scalar_reference(lambda)); }

}  // namespace

TEST(StateMoments, InitialAndNoiseFreeMean) {
  const Model m = reference(0.2);
  const auto pol = backward_solve(m);
  const auto mo = state_moments(m, pol);
  ASSERT_EQ(mo.m.size(), 21u);
  EXPECT_EQ(mo.m[0], m.spec().x0);
  EXPECT_EQ(mo.Sigma[0], Matrix::Zero(2, 2));
  const auto tr = rollout_with_noise(m, pol, std::vector<Vector>(20, Vector::Zero(2)));
  for (int k = 0; k <= 20; ++k) EXPECT_LE((mo.m[k] - tr.x[k]).norm(), 1e-10);
}

TEST(StateMoments, CovarianceMatchesPropagationForm) {
  std::mt19937_64 gen(8);
  for (int n : {1, 2, 3}) {
    const ProblemSpec s = random_spec(gen, n, 8, 0.05, true);
    const Model m = validate_spec(s);
    const auto pol = backward_solve(m);
    const auto mo = state_moments(m, pol);
    Matrix S = Matrix::Zero(2 * n, 2 * n);
    for (int k = 1; k <= 8; ++k) {
      S = mo.K[k - 1].transpose() * S * mo.K[k - 1] + m.noise_cov();
      EXPECT_LE((S - mo.Sigma[k]).norm(), 1e-10 * (1.0 + S.norm())) << "n=" << n << " k=" << k;
    }
  }
}

TEST(StateMoments, RequiresZeroOffset) {
  auto s = presets::scalar_reference(0.1);
  s.pattern.fd[3] = Vector::Constant(1, 0.2);
  const Model m = validate_spec(s);
  const auto pol = backward_solve(m);
  EXPECT_THROW(state_moments(m, pol), ValidationError);
}

TEST(StateMoments, AgreeWithSampleMoments) {
  const Model m = reference(0.3);
  const auto pol = backward_solve(m);
  const auto mo = state_moments(m, pol);
  const long long n = 20000;
  std::vector<Vector> last(n);
  for_each_path(m, pol, n, 6, [&](std::size_t i, const Trajectory& tr) { last[i] = tr.x[12]; });
  oracle::MeanAccumulator v, p, vv;
  for (const auto& x : last) {
    v.add(x[0]);
    p.add(x[1]);
    vv.add((x[0] - mo.m[12][0]) * (x[0] - mo.m[12][0]));
  }
  EXPECT_NEAR(v.mean, mo.m[12][0], 4 * v.std_error());
  EXPECT_NEAR(p.mean, mo.m[12][1], 4 * p.std_error());
  EXPECT_NEAR(vv.mean, mo.Sigma[12](0, 0), 4 * vv.std_error());
}

TEST(ExpectedLoglr, StartsAtZeroAndIsNegativeUnderNull) {
  const Model m0 = reference(0.0);
  const auto pol0 = backward_solve(m0);
  const auto mo0 = state_moments(m0, pol0);
  EXPECT_EQ(expected_loglr(m0, pol0, mo0, 0), 0.0);
  for (int t = 1; t <= 20; ++t) {
    EXPECT_LT(expected_loglr(m0, pol0, mo0, t), 0.0);
    EXPECT_LE(expected_loglr(m0, pol0, mo0, t), expected_loglr(m0, pol0, mo0, t - 1));
  }
  // Under the hypothesis controller the increments have positive mean.
  const Model m5 = reference(0.5);
  const auto pol5 = backward_solve(m5);
  const auto mo5 = state_moments(m5, pol5);
  for (int t = 1; t <= 20; ++t) EXPECT_GT(expected_loglr(m5, pol5, mo5, t), 0.0);
  EXPECT_THROW(expected_loglr(m5, pol5, mo5, 21), ValidationError);
}

TEST(ExpectedLoglr, AgreesWithSampleMean) {
  const Model m = reference(0.1);
  const auto pol = backward_solve(m);
  const auto mo = state_moments(m, pol);
  const long long n = 20000;
  std::vector<std::vector<double>> paths(n);
  for_each_path(m, pol, n, 2, [&](std::size_t i, const Trajectory& tr) { paths[i] = tr.loglr; });
  for (int t : {1, 7, 20}) {
    oracle::MeanAccumulator acc;
    for (const auto& l : paths) acc.add(l[t]);
    EXPECT_NEAR(acc.mean, expected_loglr(m, pol, mo, t), 3 * acc.std_error()) << "t=" << t;
  }
}

TEST(ScoreCi, HandExample) {
  const auto [lo, hi] = stats::score_ci(0.0, 20000);
  EXPECT_EQ(lo, 0.0);
  EXPECT_NEAR(hi, 1.92e-4, 0.01 * 1.92e-4);
}

TEST(ScoreCi, SymmetryAndOrdering) {
  for (double p : {0.01, 0.2, 0.5}) {
    const auto [lo, hi] = stats::score_ci(p, 500);
    const auto [lo2, hi2] = stats::score_ci(1.0 - p, 500);
    EXPECT_NEAR(lo, 1.0 - hi2, 1e-14);
    EXPECT_NEAR(hi, 1.0 - lo2, 1e-14);
    EXPECT_LE(lo, p);
    EXPECT_GE(hi, p);
  }
  EXPECT_THROW(stats::score_ci(0.5, 0), ValidationError);
  EXPECT_THROW(stats::score_ci(1.5, 10), ValidationError);
}

TEST(ScoreCi, WidthShrinksLikeInverseSqrt) {
  const auto [lo1, hi1] = stats::score_ci(0.3, 10000);
  const auto [lo2, hi2] = stats::score_ci(0.3, 20000);
  const double ratio = (hi2 - lo2) / (hi1 - lo1);
  EXPECT_GT(ratio, 0.69);
  EXPECT_LT(ratio, 0.73);
}

TEST(ScoreCi, Coverage) {
  std::mt19937_64 gen(12);
  const long long n = 2000;
  for (double p : {0.02, 0.2}) {
    std::binomial_distribution<long long> bin(n, p);
    int covered = 0;
    const int trials = 2000;
    for (int i = 0; i < trials; ++i) {
      const auto [lo, hi] = stats::score_ci(static_cast<double>(bin(gen)) / n, n);
      covered += (lo <= p && p <= hi) ? 1 : 0;
    }
    EXPECT_GE(covered, 0.93 * trials) << "p=" << p;
  }
}

TEST(NormalQuantile, MatchesBisectionOnErfc) {
  for (double p : {1e-10, 1e-6, 0.001, 0.025, 0.3, 0.5, 0.77, 0.975, 0.999999}) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    EXPECT_NEAR(stats::normal_quantile(p), 0.5 * (lo + hi), 1e-8) << "p=" << p;
  }
  EXPECT_NEAR(stats::normal_tail_inverse(0.025), 1.959963984540054, 1e-12);
  EXPECT_THROW(stats::normal_quantile(0.0), ValidationError);
}

TEST(McDetection, ShapesAndDiagnostics) {
  const Model m = reference(0.3);
  const auto pol = backward_solve(m);
  const auto est = mc_detection(m, pol, thresholds(0.01, 0.01), 50, 0);
  ASSERT_EQ(est.p_hat.size(), 21u);
  EXPECT_EQ(est.hits[0], 0);
  EXPECT_FALSE(est.diagnostic.empty());
  for (int t = 0; t <= 20; ++t) {
    EXPECT_LE(est.ci_lo[t], est.p_hat[t]);
    EXPECT_GE(est.ci_hi[t], est.p_hat[t]);
  }
  EXPECT_THROW(mc_detection(m, pol, thresholds(0.01, 0.01), 0, 0), ValidationError);
  EXPECT_TRUE(mc_detection(m, pol, thresholds(0.01, 0.01), 200, 0).diagnostic.empty());
}

TEST(McDetection, IndependentOfThreadCount) {
  const Model m = reference(0.1);
  const auto pol = backward_solve(m);
  const auto a = mc_detection(m, pol, thresholds(0.01, 0.01), 3000, 5);
  const auto b = mc_detection(m, pol, thresholds(0.01, 0.01), 3000, 5);
  EXPECT_EQ(a.hits, b.hits);
  // Serial recount of the same paths.
  std::vector<long long> hits(21, 0);
  for (std::uint64_t i = 0; i < 3000; ++i) {
    const auto tr = rollout(m, pol, {5, i});
    for (int t = 0; t <= 20; ++t) hits[t] += tr.loglr[t] >= std::log(99.0) ? 1 : 0;
  }
  EXPECT_EQ(a.hits, hits);
}

TEST(LambdaSearch, ToleranceOneSelectsLargestPoint) {
  const Model m = reference(0.0);
  SearchOptions opts;
  opts.epsilon = 1.0;
  opts.n_paths = 200;
  const auto rep = lambda_search(m, {0.0, 0.2, 0.5, 0.7}, thresholds(0.01, 0.01), opts);
  ASSERT_TRUE(rep.selected_mc);
  EXPECT_EQ(*rep.selected_mc, 0.5);
  EXPECT_FALSE(rep.rows[3].admissible);
  EXPECT_FALSE(rep.rows[3].note.empty());
}

TEST(LambdaSearch, SinglePointGrid) {
  SearchOptions opts;
  opts.n_paths = 500;
  const auto rep = lambda_search(reference(0.0), {0.0}, thresholds(0.01, 0.01), opts);
  ASSERT_TRUE(rep.selected_mc);
  EXPECT_EQ(*rep.selected_mc, 0.0);
  ASSERT_EQ(rep.notes.size(), 1u);
  EXPECT_NE(rep.notes[0].find("degenerate grid"), std::string::npos);
}

TEST(LambdaSearch, NoAdmissiblePoint) {
  SearchOptions opts;
  opts.n_paths = 10;
  EXPECT_THROW(lambda_search(reference(0.0), {}, thresholds(0.01, 0.01), opts), ValidationError);
  EXPECT_THROW(lambda_search(reference(0.0), {0.6, 1.0}, thresholds(0.01, 0.01), opts), ValidationError);
}

TEST(LambdaSearch, BoundModeIsNoLooserThanMc) {
  SearchOptions opts;
  opts.mode = SearchMode::both;
  opts.n_paths = 2000;
  opts.epsilon = 0.9;
  const auto rep = lambda_search(reference(0.0), {0.0, 0.02, 0.04, 0.06, 0.1}, thresholds(0.01, 0.01), opts);
  ASSERT_TRUE(rep.selected_mc);
  ASSERT_TRUE(rep.selected_bound);
  EXPECT_LE(*rep.selected_bound, *rep.selected_mc);
}

TEST(LambdaSearch, SelectionMonotoneInTolerance) {
  SearchOptions opts;
  opts.n_paths = 4000;
  const auto rep = lambda_search(reference(0.0), {0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.2}, thresholds(0.01, 0.01), opts);
  double prev = -1.0;
  for (double eps : {0.005, 0.01, 0.02, 0.05, 0.2}) {
    const auto sel = rep.select(eps, false);
    const double v = sel ? *sel : -1.0;
    EXPECT_GE(v, prev) << "eps=" << eps;
    prev = v;
  }
}

TEST(LambdaSearch, ModeParsing) {
  EXPECT_EQ(parse_search_mode("both"), SearchMode::both);
  EXPECT_THROW(parse_search_mode("fast"), ValidationError);
}

TEST(DefaultGrid, SpansAdmissibleInterval) {
  const auto g = default_lambda_grid(reference(0.0), 51);
  ASSERT_EQ(g.size(), 51u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_NEAR(g.back(), 0.5, 1e-12);
}
