#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stealth_lqr/model.hpp"

namespace stealth_lqr {

/// The intensity violates the sufficient well-posedness condition and no override was given.
class IllPosedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct WellPosedness {
  bool holds = false;
  /// Smallest eigenvalue of I - lambda * Sy^{-1/2} R_beta^{-1} Sy^{-1/2}.
  double min_eigenvalue = 0.0;
  /// Largest lambda satisfying the condition; the admissible set is [0, lambda_max].
  double lambda_max = 0.0;
};

inline constexpr double kWellPosednessTol = 1e-10;

/// Sufficient condition for solvability of the backward recursion.
inline WellPosedness wellposedness(const Model& model) {
  const auto& s = model.spec();
  const Matrix sy_inv_half = linalg::spd_inv_sqrt(s.sigma_y2);
  const Matrix core = linalg::symmetrize(sy_inv_half * linalg::spd_inverse(s.R_beta) * sy_inv_half);
  const double mu_max = linalg::max_eigenvalue(core);
  const Matrix test = Matrix::Identity(s.n, s.n) - s.lambda * core;
  WellPosedness w;
  w.min_eigenvalue = linalg::min_eigenvalue(test);
  w.holds = w.min_eigenvalue >= -kWellPosednessTol;
  w.lambda_max = 1.0 / mu_max;
  return w;
}

inline bool wellposedness_holds(const Model& model) { return wellposedness(model).holds; }

/// Output of the backward recursion. Value function V_t(x) = 1/2 x'P_t x + s_t'x + c_t.
struct SolvedPolicy {
  int n = 0;
  int T = 0;
  double lambda = 0.0;
  std::vector<Matrix> P;       // t = 0..T
  std::vector<Vector> s;       // t = 0..T
  std::vector<double> c;       // t = 0..T
  std::vector<Matrix> gain;    // t = 0..T-1, -H^{-1} G'
  std::vector<Vector> offset;  // t = 0..T-1, -H^{-1}(r + B's_{t+1})
  std::vector<Matrix> M, H, G; // t = 0..T-1
};

struct SolveOptions {
  /// Solve even when the well-posedness condition fails; H_t is still checked per step.
  bool force = false;
  double max_condition = 1e12;
};

inline SolvedPolicy backward_solve(const Model& model, const SolveOptions& opts = {}) {
  const auto& spec = model.spec();
  const int n = spec.n;
  const int T = spec.T;
  const int dim = 2 * n;

  if (!opts.force) {
    const WellPosedness w = wellposedness(model);
    if (!w.holds) {
      std::ostringstream os;
      os << "lambda=" << spec.lambda << " violates the well-posedness condition (smallest eigenvalue "
         << w.min_eigenvalue << ", admissible range [0, " << w.lambda_max << "])";
      throw IllPosedError(os.str());
    }
  }

  SolvedPolicy pol;
  pol.n = n;
  pol.T = T;
  pol.lambda = spec.lambda;
  pol.P.assign(T + 1, Matrix::Zero(dim, dim));
  pol.s.assign(T + 1, Vector::Zero(dim));
  pol.c.assign(T + 1, 0.0);
  pol.gain.assign(T, Matrix());
  pol.offset.assign(T, Vector());
  pol.M.assign(T, Matrix());
  pol.H.assign(T, Matrix());
  pol.G.assign(T, Matrix());

  const Vector& vbar_T = spec.vbar[T];
  pol.P[T].topLeftCorner(n, n) = spec.T_v;
  pol.s[T].head(n) = -spec.T_v.transpose() * vbar_T;
  pol.c[T] = 0.5 * vbar_T.dot(spec.T_v * vbar_T);

  const Matrix& A = model.A();
  const Matrix& B = model.B();
  const Matrix& sigma_w = model.noise_cov();

  for (int t = T - 1; t >= 0; --t) {
    const StageCoefficients sc = stage_coefficients(model, t);
    const Matrix& Pn = pol.P[t + 1];
    const Vector& sn = pol.s[t + 1];

    Matrix M = linalg::symmetrize(sc.Q + A.transpose() * Pn * A);
    Matrix H = linalg::symmetrize(sc.R + B.transpose() * Pn * B);
    Matrix G = sc.N + A.transpose() * Pn * B;

    Eigen::LLT<Matrix> llt(H);
    const double cond = linalg::spd_condition(H);
    if (llt.info() != Eigen::Success || !(cond <= opts.max_condition)) {
      std::ostringstream os;
      os << "H_t is singular or indefinite at t=" << t << " (lambda=" << spec.lambda
         << ", condition number " << cond << ")";
      throw NumericalError(os.str());
    }

    const Vector z = sc.r + B.transpose() * sn;
    Matrix gain = -llt.solve(G.transpose());
    Vector offset = -llt.solve(z);

    pol.P[t] = linalg::symmetrize(M + G * gain);
    pol.s[t] = sc.q + A.transpose() * sn + G * offset;
    pol.c[t] = sc.d + pol.c[t + 1] + 0.5 * z.dot(offset) + 0.5 * (Pn * sigma_w).trace();

    if (!pol.P[t].allFinite() || !pol.s[t].allFinite() || !std::isfinite(pol.c[t])) {
      std::ostringstream os;
      os << "backward recursion produced non-finite values at t=" << t << " (lambda=" << spec.lambda << ")";
      throw NumericalError(os.str());
    }

    pol.gain[t] = std::move(gain);
    pol.offset[t] = std::move(offset);
    pol.M[t] = std::move(M);
    pol.H[t] = std::move(H);
    pol.G[t] = std::move(G);
  }
  return pol;
}

/// u*_t = gain_t x + offset_t = (alpha*_t, beta*_t).
inline Vector optimal_control(const SolvedPolicy& pol, int t, const Vector& x) {
  if (t < 0 || t >= pol.T)
    throw ValidationError("optimal_control: t=" + std::to_string(t) + " outside [0, " + std::to_string(pol.T - 1) + "]");
  return pol.gain[t] * x + pol.offset[t];
}

inline double value_at(const SolvedPolicy& pol, int t, const Vector& x) {
  if (t < 0 || t > pol.T)
    throw ValidationError("value_at: t=" + std::to_string(t) + " outside [0, " + std::to_string(pol.T) + "]");
  return 0.5 * x.dot(pol.P[t] * x) + pol.s[t].dot(x) + pol.c[t];
}

}  // namespace stealth_lqr
