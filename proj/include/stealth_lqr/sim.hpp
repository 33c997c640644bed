#pragma once

#include <cmath>
#include <vector>

#include "stealth_lqr/detector.hpp"
#include "stealth_lqr/rng.hpp"
#include "stealth_lqr/solver.hpp"
#include "stealth_lqr/trajectory.hpp"

namespace stealth_lqr {

/// Draws w_t = (Z_t, Y_t), t = 0..T-1, from the path's counter-based stream.
/// Z_t is drawn before Y_t, component by component.
inline std::vector<Vector> sample_noise(const Model& model, SeedSpec seed) {
  const int n = model.n();
  NormalStream stream(seed);
  std::vector<Vector> w(static_cast<std::size_t>(model.horizon()));
  Vector z(n), y(n);
  for (auto& wt : w) {
    for (int i = 0; i < n; ++i) z[i] = stream.next();
    for (int i = 0; i < n; ++i) y[i] = stream.next();
    wt.resize(2 * n);
    wt.head(n) = model.chol_z() * z;
    wt.tail(n) = model.chol_y() * y;
  }
  return w;
}

/// Primary (deception-free) cost of a realized path.
inline double primary_cost(const Model& model, const Trajectory& traj) {
  const auto& s = model.spec();
  const int n = s.n;
  double cost = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const Vector alpha = traj.u[t].head(n);
    const Vector beta = traj.u[t].tail(n);
    const Vector dv = traj.x[t].head(n) - s.vbar[t];
    cost += 0.5 * alpha.dot(s.R_alpha * alpha) + 0.5 * beta.dot(s.R_beta * beta) + 0.5 * dv.dot(s.R_v * dv);
  }
  const Vector dv = traj.x.back().head(n) - s.vbar[traj.horizon()];
  cost += 0.5 * dv.dot(s.T_v * dv);
  return cost;
}

/// Closed-loop path under `pol` driven by the given noise sequence.
inline Trajectory rollout_with_noise(const Model& model, const SolvedPolicy& pol, std::vector<Vector> noise) {
  const int T = model.horizon();
  if (static_cast<int>(noise.size()) != T || pol.T != T)
    throw ValidationError("rollout: noise/policy horizon does not match the model");
  Trajectory tr;
  tr.w = std::move(noise);
  tr.x.reserve(T + 1);
  tr.u.reserve(T);
  tr.x.push_back(model.spec().x0);
  for (int t = 0; t < T; ++t) {
    tr.u.push_back(optimal_control(pol, t, tr.x.back()));
    tr.x.push_back(model.A() * tr.x.back() + model.B() * tr.u.back() + tr.w[t]);
  }
  tr.primary_cost = primary_cost(model, tr);
  tr.loglr = loglr_path(model, tr.x);
  return tr;
}

inline Trajectory rollout(const Model& model, const SolvedPolicy& pol, SeedSpec seed) {
  return rollout_with_noise(model, pol, sample_noise(model, seed));
}

/// Realized blue-team cost: primary cost minus lambda * log L_T.
/// Its expectation is V_0(x0).
inline double augmented_cost(const Model& model, const Trajectory& traj) {
  return traj.primary_cost - model.lambda() * traj.loglr.back();
}

/// beta^{H1}_t = Fb_t v_t + Fc_t p_t + fd_t along the path's own states.
inline Vector hypothesis_control(const Model& model, const Vector& x, int t) {
  const int n = model.n();
  const auto& pat = model.spec().pattern;
  return pat.Fb[t] * x.head(n) + pat.Fc[t] * x.tail(n) + pat.fd[t];
}

/// D = d(0, beta*) / d(0, beta^{H1}) with d the root-sum-of-squares over t = 0..T-1.
/// Both controllers are evaluated along the given path.
inline double deception_measure(const Model& model, const Trajectory& traj) {
  const int n = model.n();
  double num = 0.0, den = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    num += traj.u[t].tail(n).squaredNorm();
    den += hypothesis_control(model, traj.x[t], t).squaredNorm();
  }
  den = std::sqrt(den);
  if (den < 1e-14) throw ValidationError("deception_measure: degenerate pattern (zero deceptive control along path)");
  return std::sqrt(num) / den;
}

}  // namespace stealth_lqr
