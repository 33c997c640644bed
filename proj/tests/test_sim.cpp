#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stealth_lqr/analysis.hpp"
#include "stealth_lqr/presets.hpp"
#include "stealth_lqr/sim.hpp"

using namespace stealth_lqr;

namespace {

Model reference(double lambda) { return validate_spec(presets::scalar_reference(lambda)); }

std::vector<Vector> zero_noise(const Model& m) { return std::vector<Vector>(m.horizon(), Vector::Zero(m.state_dim())); }

}  // namespace

TEST(Rollout, DeterministicPerSeed) {
  const Model m = reference(0.2);
  const auto pol = backward_solve(m);
  const auto a = rollout(m, pol, {5, 17});
  const auto b = rollout(m, pol, {5, 17});
  const auto c = rollout(m, pol, {5, 18});
  for (int t = 0; t <= 20; ++t) EXPECT_EQ(a.x[t], b.x[t]);
  EXPECT_EQ(a.loglr, b.loglr);
  EXPECT_NE(a.x[20], c.x[20]);
}

TEST(Rollout, ReconstructsDynamics) {
  const Model m = reference(0.1);
  const auto pol = backward_solve(m);
  const auto tr = rollout(m, pol, {1, 0});
  ASSERT_EQ(tr.x.size(), 21u);
  ASSERT_EQ(tr.loglr.size(), 21u);
  EXPECT_EQ(tr.x[0], m.spec().x0);
  for (int t = 0; t < 20; ++t) {
    EXPECT_LE((tr.x[t + 1] - (m.A() * tr.x[t] + tr.u[t] + tr.w[t])).norm(), 1e-13);
    EXPECT_LE((tr.u[t] - optimal_control(pol, t, tr.x[t])).norm(), 1e-13);
  }
  EXPECT_EQ(tr.loglr[0], 0.0);
}

TEST(Rollout, SharedNoiseAcrossIntensities) {
  const auto a = sample_noise(reference(0.0), {0, 0});
  const auto b = sample_noise(reference(0.3), {0, 0});
  for (int t = 0; t < 20; ++t) EXPECT_EQ(a[t], b[t]);
}

TEST(Rollout, RejectsMismatchedNoise) {
  const Model m = reference(0.0);
  EXPECT_THROW(rollout_with_noise(m, backward_solve(m), std::vector<Vector>(3, Vector::Zero(2))), ValidationError);
}

// Without noise the realized augmented cost is V_0(x0) minus the accumulated noise terms.
TEST(Rollout, ZeroNoiseCostMatchesValueFunction) {
  for (double lam : {0.0, 0.04, 0.3, 0.5}) {
    const Model m = reference(lam);
    const auto pol = backward_solve(m);
    const auto tr = rollout_with_noise(m, pol, zero_noise(m));
    double noise_terms = 0.0;
    for (int t = 1; t <= 20; ++t) noise_terms += 0.5 * (pol.P[t] * m.noise_cov()).trace();
    EXPECT_NEAR(augmented_cost(m, tr), value_at(pol, 0, m.spec().x0) - noise_terms, 1e-9) << "lambda=" << lam;
  }
}

TEST(PrimaryCost, HandExamples) {
  const Model m = reference(0.0);
  Trajectory tr;
  for (int t = 0; t <= 20; ++t) {
    Vector x(2);
    x << 1.0 - t / 20.0, 4.0;
    tr.x.push_back(x);
  }
  tr.u.assign(20, Vector::Zero(2));
  EXPECT_NEAR(primary_cost(m, tr), 0.0, 1e-15);
  for (auto& u : tr.u) u[1] = 1.0;
  EXPECT_NEAR(primary_cost(m, tr), 5.0 * 20, 1e-12);
  for (auto& u : tr.u) u << 2.0, 0.0;
  EXPECT_NEAR(primary_cost(m, tr), 2.0 * 20, 1e-12);
  tr.x.back()[0] += 3.0;
  EXPECT_NEAR(primary_cost(m, tr), 40.0 + 4.5, 1e-12);
}

TEST(DeceptionMeasure, Endpoints) {
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const Model m0 = reference(0.0);
    EXPECT_EQ(deception_measure(m0, rollout(m0, backward_solve(m0), {seed, 0})), 0.0);
    const Model m5 = reference(0.5);
    EXPECT_NEAR(deception_measure(m5, rollout(m5, backward_solve(m5), {seed, 0})), 1.0, 1e-9);
  }
}

TEST(DeceptionMeasure, IncreasesWithIntensity) {
  double prev = -1.0;
  for (double lam : {0.0, 0.04, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    const Model m = reference(lam);
    const double d = deception_measure(m, rollout(m, backward_solve(m), {0, 0}));
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(DeceptionMeasure, DegeneratePatternRejected) {
  auto s = presets::scalar_reference(0.1);
  for (auto& f : s.pattern.Fb) f.setZero();
  for (auto& f : s.pattern.Fc) f.setZero();
  const Model m = validate_spec(s);
  EXPECT_THROW(deception_measure(m, rollout(m, backward_solve(m), {0, 0})), ValidationError);
}

TEST(Rollout, DeviationFromNullGrowsWithIntensity) {
  const Model m0 = reference(0.0);
  const auto base = rollout(m0, backward_solve(m0), {2, 0});
  double prev = 0.0;
  for (double lam : {0.1, 0.3}) {
    const Model m = reference(lam);
    const auto tr = rollout(m, backward_solve(m), {2, 0});
    double dev = 0.0;
    for (int t = 0; t <= 20; ++t) dev += (tr.x[t] - base.x[t]).squaredNorm();
    EXPECT_GT(dev, prev);
    prev = dev;
  }
}

TEST(Rollout, MeanAugmentedCostMatchesValue) {
  const Model m = reference(0.1);
  const auto pol = backward_solve(m);
  const long long n = 20000;
  std::vector<double> costs(n);
  for_each_path(m, pol, n, 4, [&](std::size_t i, const Trajectory& tr) { costs[i] = augmented_cost(m, tr); });
  oracle::MeanAccumulator acc;
  for (double c : costs) acc.add(c);
  EXPECT_NEAR(acc.mean, value_at(pol, 0, m.spec().x0), 3 * acc.std_error());
}

TEST(Rollout, PrimaryCostRisesWithIntensity) {
  double prev = -1.0;
  for (double lam : {0.0, 0.02, 0.04, 0.06, 0.08, 0.1}) {
    const Model m = reference(lam);
    const auto pol = backward_solve(m);
    oracle::MeanAccumulator acc;
    for (std::uint64_t i = 0; i < 2000; ++i) acc.add(rollout(m, pol, {0, i}).primary_cost);
    EXPECT_GE(acc.mean, prev) << "lambda=" << lam;
    prev = acc.mean;
  }
}
