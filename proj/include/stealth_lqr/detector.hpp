#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stealth_lqr/model.hpp"
#include "stealth_lqr/trajectory.hpp"

namespace stealth_lqr {

/// SPRT thresholds: reject H0 when L_t >= U, accept when L_t <= L.
struct SprtConfig {
  double a = 0.01;  // type-I bound
  double b = 0.01;  // type-II bound
  double U = 99.0;
  double L = 0.01 / 0.99;

  double log_upper() const { return std::log(U); }
  double log_lower() const { return std::log(L); }
};

enum class SprtDecision { accept_h0, reject_h0, keep_going };

inline const char* to_string(SprtDecision d) {
  switch (d) {
    case SprtDecision::accept_h0: return "accept_H0";
    case SprtDecision::reject_h0: return "reject_H0";
    case SprtDecision::keep_going: return "continue";
  }
  return "?";
}

struct SprtTrace {
  std::vector<double> loglr;
  std::vector<SprtDecision> decision;
  std::optional<int> first_rejection;
  std::optional<int> first_acceptance;
};

/// U = (1-b)/a, L = b/(1-a) for a, b in (0, 1/2).
inline SprtConfig thresholds(double a, double b) {
  if (!(a > 0.0 && a < 0.5)) throw ValidationError("SPRT: type-I bound a must lie in (0, 1/2)");
  if (!(b > 0.0 && b < 0.5)) throw ValidationError("SPRT: type-II bound b must lie in (0, 1/2)");
  return SprtConfig{a, b, (1.0 - b) / a, b / (1.0 - a)};
}

/// Per-step log-likelihood-ratio increment from the p-innovation
/// delta = p_{k+1} - v_k - p_k and the pattern mean mu = Fb v_k + Fc p_k + fd:
///   1/2 (|delta|^2 - |delta - mu|^2) in the (Sigma_y^2)^{-1} norm.
/// Independent of alpha_k.
inline double loglr_increment(const Model& model, const Vector& v, const Vector& p, const Vector& p_next, int k) {
  const auto& s = model.spec();
  if (k < 0 || k >= s.T)
    throw ValidationError("loglr_increment: k=" + std::to_string(k) + " outside [0, " + std::to_string(s.T - 1) + "]");
  const Matrix& syi = model.sigma_y2_inv();
  const Vector delta = p_next - v - p;
  const Vector mu = s.pattern.Fb[k] * v + s.pattern.Fc[k] * p + s.pattern.fd[k];
  const Vector resid = delta - mu;
  return 0.5 * (delta.dot(syi * delta) - resid.dot(syi * resid));
}

/// log L_t for t = 0..T along a state path (log L_0 = 0).
inline std::vector<double> loglr_path(const Model& model, const std::vector<Vector>& x) {
  const int n = model.n();
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    out[k + 1] = out[k] + loglr_increment(model, x[k].head(n), x[k].tail(n), x[k + 1].tail(n), static_cast<int>(k));
  }
  return out;
}

inline SprtDecision classify(double loglr, const SprtConfig& cfg) {
  if (loglr >= cfg.log_upper()) return SprtDecision::reject_h0;
  if (loglr <= cfg.log_lower()) return SprtDecision::accept_h0;
  return SprtDecision::keep_going;
}

/// Runs the test at every t without stopping: a path may accept and later reject.
inline SprtTrace run_sprt(const Model& model, const Trajectory& traj, const SprtConfig& cfg) {
  SprtTrace tr;
  tr.loglr = loglr_path(model, traj.x);
  tr.decision.reserve(tr.loglr.size());
  for (std::size_t t = 0; t < tr.loglr.size(); ++t) {
    const SprtDecision d = classify(tr.loglr[t], cfg);
    tr.decision.push_back(d);
    if (d == SprtDecision::reject_h0 && !tr.first_rejection) tr.first_rejection = static_cast<int>(t);
    if (d == SprtDecision::accept_h0 && !tr.first_acceptance) tr.first_acceptance = static_cast<int>(t);
  }
  return tr;
}

}  // namespace stealth_lqr
