#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stealth_lqr/detector.hpp"
#include "stealth_lqr/parallel.hpp"
#include "stealth_lqr/sim.hpp"
#include "stealth_lqr/solver.hpp"
#include "stealth_lqr/stats.hpp"

namespace stealth_lqr {

/// Gaussian law of the optimally controlled state, x*_k ~ N(m_k, Sigma_k).
struct StateMoments {
  std::vector<Vector> m;      // k = 0..T
  std::vector<Matrix> Sigma;  // k = 0..T
  std::vector<Matrix> K;      // K_k = A' - G_k H_k^{-1}, k = 0..T-1
  std::vector<Matrix> H_inv;  // k = 0..T-1
};

namespace detail {

inline void require_offset_free(const Model& model, const char* who) {
  if (!model.offset_free()) throw ValidationError(std::string(who) + ": moments require f^d == 0");
}

/// E_2 = [0 I]' (2n x n).
inline Matrix lower_selector(int n) {
  Matrix e = Matrix::Zero(2 * n, n);
  e.bottomRows(n) = Matrix::Identity(n, n);
  return e;
}

/// F_k = [Fb_k Fc_k]' (2n x n), so F_k' x = Fb v + Fc p.
inline Matrix stacked_pattern(const Model& model, int k) {
  const int n = model.n();
  Matrix f(2 * n, n);
  f.topRows(n) = model.spec().pattern.Fb[k].transpose();
  f.bottomRows(n) = model.spec().pattern.Fc[k].transpose();
  return f;
}

/// E_2 (Sigma_y^2)^{-1} F_k' (2n x 2n).
inline Matrix innovation_coupling(const Model& model, int k) {
  return lower_selector(model.n()) * model.sigma_y2_inv() * stacked_pattern(model, k).transpose();
}

/// S_k = F_k Sy^{-1} F_k' + 2 G_k H_k^{-1} E_2 Sy^{-1} F_k'.
inline Matrix loglr_curvature(const Model& model, const SolvedPolicy& pol, const Matrix& h_inv, int k) {
  const Matrix f = stacked_pattern(model, k);
  return f * model.sigma_y2_inv() * f.transpose() + 2.0 * pol.G[k] * h_inv * innovation_coupling(model, k);
}

}  // namespace detail

/// Mean and covariance recursions of the closed-loop state (requires f^d == 0).
inline StateMoments state_moments(const Model& model, const SolvedPolicy& pol) {
  detail::require_offset_free(model, "state_moments");
  const int T = model.horizon();
  const int dim = model.state_dim();
  StateMoments mo;
  mo.m.reserve(T + 1);
  mo.Sigma.reserve(T + 1);
  mo.m.push_back(model.spec().x0);
  mo.Sigma.push_back(Matrix::Zero(dim, dim));
  const Matrix& sigma_w = model.noise_cov();
  for (int k = 1; k <= T; ++k) {
    const Matrix h_inv = linalg::spd_inverse(pol.H[k - 1]);
    const Matrix K = model.A().transpose() - pol.G[k - 1] * h_inv;
    const Vector& m_prev = mo.m.back();
    const Matrix& S_prev = mo.Sigma.back();
    const Vector shift = h_inv * pol.s[k];
    const Vector m = K.transpose() * m_prev - shift;
    const Matrix second = S_prev + m_prev * m_prev.transpose();
    const Vector km = K.transpose() * m_prev;
    Matrix S = K.transpose() * second * K - km * shift.transpose() - shift * km.transpose() +
               shift * shift.transpose() + sigma_w - m * m.transpose();
    mo.K.push_back(K);
    mo.H_inv.push_back(h_inv);
    mo.m.push_back(m);
    mo.Sigma.push_back(linalg::symmetrize(S));
  }
  return mo;
}

/// E log L*_t in closed form from the state moments (requires f^d == 0).
inline double expected_loglr(const Model& model, const SolvedPolicy& pol, const StateMoments& mo, int t) {
  detail::require_offset_free(model, "expected_loglr");
  if (t < 0 || t > model.horizon())
    throw ValidationError("expected_loglr: t=" + std::to_string(t) + " outside [0, " + std::to_string(model.horizon()) + "]");
  double acc = 0.0;
  for (int k = 0; k < t; ++k) {
    const Matrix& h_inv = mo.H_inv[k];
    const Matrix coupling = detail::innovation_coupling(model, k);
    const Matrix S = detail::loglr_curvature(model, pol, h_inv, k);
    const Matrix second = mo.Sigma[k] + mo.m[k] * mo.m[k].transpose();
    acc += 2.0 * pol.s[k + 1].dot(h_inv * coupling * mo.m[k]) + (S * second).trace();
  }
  return -0.5 * acc;
}

/// Per-t Monte Carlo estimate of P(log L*_t >= log U) with score intervals.
struct DetectionEstimate {
  double lambda = 0.0;
  long long n_paths = 0;
  double confidence_c = 0.05;
  std::vector<long long> hits;  // t = 0..T
  std::vector<double> p_hat, ci_lo, ci_hi;
  std::string diagnostic;

  double max_ci_hi() const {
    double m = 0.0;
    for (double v : ci_hi) m = std::max(m, v);
    return m;
  }
  double max_p_hat() const {
    double m = 0.0;
    for (double v : p_hat) m = std::max(m, v);
    return m;
  }
};

/// Runs `fn(index, trajectory)` on paths 0..n_paths-1 of the given master seed.
/// Path noise depends only on (master_seed, index), so results do not depend on threading.
template <typename Fn>
void for_each_path(const Model& model, const SolvedPolicy& pol, long long n_paths, std::uint64_t master_seed, Fn&& fn) {
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t i) {
    fn(i, rollout(model, pol, SeedSpec{master_seed, static_cast<std::uint64_t>(i)}));
  });
}

inline DetectionEstimate mc_detection(const Model& model, const SolvedPolicy& pol, const SprtConfig& cfg,
                                      long long n_paths, std::uint64_t master_seed, double c = 0.05) {
  if (n_paths < 1) throw ValidationError("mc_detection: n_paths must be positive");
  const int T = model.horizon();
  const double log_u = cfg.log_upper();
  std::vector<std::vector<unsigned char>> hit(static_cast<std::size_t>(n_paths));
  for_each_path(model, pol, n_paths, master_seed, [&](std::size_t i, const Trajectory& tr) {
    auto& row = hit[i];
    row.resize(T + 1);
    for (int t = 0; t <= T; ++t) row[t] = tr.loglr[t] >= log_u ? 1 : 0;
  });
  DetectionEstimate est;
  est.lambda = model.lambda();
  est.n_paths = n_paths;
  est.confidence_c = c;
  est.hits.assign(T + 1, 0);
  for (const auto& row : hit)
    for (int t = 0; t <= T; ++t) est.hits[t] += row[t];
  for (int t = 0; t <= T; ++t) {
    const double p = static_cast<double>(est.hits[t]) / static_cast<double>(n_paths);
    const auto [lo, hi] = stats::score_ci(p, n_paths, c);
    est.p_hat.push_back(p);
    est.ci_lo.push_back(lo);
    est.ci_hi.push_back(hi);
  }
  if (n_paths < 100) est.diagnostic = "warning: fewer than 100 paths, confidence intervals are unreliable";
  return est;
}

}  // namespace stealth_lqr
