#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stealth_lqr/analysis.hpp"
#include "stealth_lqr/detector.hpp"

namespace stealth_lqr {

/// log L*_t = L0 + L1'w + w'L2 w with w = Concat(x_0, w_0, ..., w_{t-1}).
/// Block slot 0 holds x_0 and slot k+1 holds w_k.
struct LoglrQuadraticForm {
  int t = 0;
  double L0 = 0.0;
  Vector L1;
  Matrix L2;
  Matrix L2s;
  Vector mw;  // mean of w
  Matrix Sw;  // covariance of w, block-diagonal with a zero x_0 block
  std::vector<Matrix> Sw_blocks;

  /// Evaluates the representation on one stacked noise vector.
  double evaluate(const Vector& w) const { return L0 + L1.dot(w) + w.dot(L2 * w); }
  /// Mean of the representation under w ~ N(mw, Sw).
  double mean() const { return L0 + L1.dot(mw) + (L2s * Sw).trace() + mw.dot(L2s * mw); }
};

/// Assembles the quadratic representation of log L*_t for the optimal policy (requires f^d == 0).
inline LoglrQuadraticForm assemble_tensors(const Model& model, const SolvedPolicy& pol, const StateMoments& mo, int t) {
  detail::require_offset_free(model, "assemble_tensors");
  if (t < 0 || t > model.horizon())
    throw ValidationError("assemble_tensors: t=" + std::to_string(t) + " outside [0, " + std::to_string(model.horizon()) + "]");
  const int d = model.state_dim();
  const int blocks = t + 1;
  const Matrix I = Matrix::Identity(d, d);

  // prod[a][b + 1] = K_b' ... K_a' for 0 <= a <= b + 1 <= t (identity when a = b + 1).
  std::vector<std::vector<Matrix>> prod(static_cast<std::size_t>(t + 1), std::vector<Matrix>(static_cast<std::size_t>(t + 1)));
  for (int b = -1; b <= t - 1; ++b) {
    prod[b + 1][b + 1] = I;
    for (int a = b; a >= 0; --a) prod[a][b + 1] = prod[a + 1][b + 1] * mo.K[a].transpose();
  }
  auto C = [&](int a, int b) -> const Matrix& { return prod[a][b + 1]; };

  // drift[k] = D_{k-1}: deterministic part of x*_k.
  std::vector<Vector> drift(static_cast<std::size_t>(t + 1), Vector::Zero(d));
  for (int k = 1; k <= t; ++k)
    for (int j = 0; j <= k - 1; ++j) drift[k] -= C(j + 1, k - 1) * (mo.H_inv[j] * pol.s[j + 1]);
  auto D = [&](int k_minus_1) -> const Vector& { return drift[k_minus_1 + 1]; };

  std::vector<Matrix> coupling, curv, curv_s;
  std::vector<Vector> hs;  // H_k^{-1} s_{k+1}
  for (int k = 0; k < t; ++k) {
    coupling.push_back(detail::innovation_coupling(model, k));
    curv.push_back(detail::loglr_curvature(model, pol, mo.H_inv[k], k));
    curv_s.push_back(linalg::symmetrize(curv.back()));
    hs.push_back(mo.H_inv[k] * pol.s[k + 1]);
  }

  LoglrQuadraticForm f;
  f.t = t;
  const int N = d * blocks;
  f.L1 = Vector::Zero(N);
  f.L2 = Matrix::Zero(N, N);

  double l0 = 0.0;
  for (int k = 0; k < t; ++k) l0 += 2.0 * hs[k].dot(coupling[k] * D(k - 1)) + D(k - 1).dot(curv[k] * D(k - 1));
  f.L0 = -0.5 * l0;

  for (int k = -1; k <= t - 1; ++k) {
    Vector seg = Vector::Zero(d);
    if (k >= 0) seg += coupling[k] * D(k - 1);
    for (int j = k + 1; j <= t - 1; ++j)
      seg -= C(k + 1, j - 1).transpose() * (coupling[j].transpose() * hs[j] + curv_s[j] * D(j - 1));
    f.L1.segment(d * (k + 1), d) = seg;
  }

  for (int i = -1; i <= t - 1; ++i) {
    for (int j = -1; j <= t - 1; ++j) {
      Matrix blk = Matrix::Zero(d, d);
      if (i >= 0 && j <= i - 1) blk += 2.0 * coupling[i] * C(j + 1, i - 1);
      for (int k = std::max(i, j) + 1; k <= t - 1; ++k)
        blk -= C(i + 1, k - 1).transpose() * curv[k].transpose() * C(j + 1, k - 1);
      f.L2.block(d * (i + 1), d * (j + 1), d, d) = 0.5 * blk;
    }
  }
  f.L2s = linalg::symmetrize(f.L2);

  f.mw = Vector::Zero(N);
  f.mw.head(d) = mo.m[0];
  f.Sw_blocks.push_back(mo.Sigma[0]);
  for (int k = 0; k < t; ++k) f.Sw_blocks.push_back(model.noise_cov());
  f.Sw = linalg::block_diag(f.Sw_blocks);
  return f;
}

/// Stacks Concat(x_0, w_0, ..., w_{t-1}) from a trajectory.
inline Vector stacked_noise(const Trajectory& tr, int t) {
  const Eigen::Index d = tr.x.front().size();
  Vector w(d * (t + 1));
  w.head(d) = tr.x.front();
  for (int k = 0; k < t; ++k) w.segment(d * (k + 1), d) = tr.w[k];
  return w;
}

inline double quadratic_loglr(const LoglrQuadraticForm& form, const Vector& path_noises) {
  if (path_noises.size() != form.L1.size())
    throw ValidationError("quadratic_loglr: expected noise vector of length " + std::to_string(form.L1.size()) +
                          ", got " + std::to_string(path_noises.size()));
  return form.evaluate(path_noises);
}

/// Gaussian quadratic-form tail: P(X'AX - E X'AX >= s) <= exp(-1/8 min(s^2/|M|_F^2, s/|M|_2)),
/// M = Sigma^{1/2} A Sigma^{1/2}. A PSD Sigma is handled through its PSD square root.
inline double hanson_wright_from_norms(double fro, double op, double tail_point) {
  if (fro == 0.0 || op == 0.0) return 0.0;
  return std::exp(-0.125 * std::min(tail_point * tail_point / (fro * fro), tail_point / op));
}

inline double hanson_wright_tail(const Matrix& A, const Matrix& Sigma, double tail_point) {
  if (A.rows() != A.cols()) throw ValidationError("hanson_wright_tail: A must be square");
  if (Sigma.rows() != A.rows() || Sigma.cols() != A.cols())
    throw ValidationError("hanson_wright_tail: Sigma must match A");
  if (!(tail_point >= 0.0)) throw ValidationError("hanson_wright_tail: tail point must be nonnegative");
  const Matrix root = linalg::psd_sqrt(Sigma);
  const Matrix M = root * A * root;
  return hanson_wright_from_norms(M.norm(), linalg::spectral_norm(M), tail_point);
}

/// Gaussian concentration for a linear form with Lipschitz constant `direction_norm`.
inline double gaussian_linear_tail(double direction_norm, double eps) {
  if (!(direction_norm >= 0.0) || !(eps >= 0.0)) throw ValidationError("gaussian_linear_tail: negative input");
  if (direction_norm == 0.0) return eps > 0.0 ? 0.0 : 1.0;
  return std::exp(-eps * eps / (2.0 * direction_norm * direction_norm));
}

struct BoundRow {
  double lambda = 0.0;
  int t = 0;
  double E_loglr = 0.0;
  double delta = 0.0;
  double linear_norm = 0.0;  // |Sw^{1/2}(L1 + 2 L2s mw)|_2
  double quad_fro = 0.0;     // |Sw^{1/2} L2s Sw^{1/2}|_F
  double quad_op = 0.0;      // |Sw^{1/2} L2s Sw^{1/2}|_2
  double eps1 = 0.0;
  double eps2 = 0.0;
  double linear_tail = 1.0;
  double quadratic_tail = 1.0;
  double total_bound = 1.0;
};

/// Sum of the two tails for a split eps1 + eps2 = delta.
inline double split_bound(const BoundRow& row, double eps1) {
  const double eps2 = row.delta - eps1;
  return gaussian_linear_tail(row.linear_norm, eps1) + hanson_wright_from_norms(row.quad_fro, row.quad_op, eps2);
}

namespace detail {

/// Minimizes split_bound over eps1 in (0, delta): coarse scan, then golden-section
/// refinement to 1e-6 * delta around the best scan point.
inline double best_split(const BoundRow& row) {
  const double delta = row.delta;
  const double lo_edge = 1e-9 * delta, hi_edge = delta - 1e-9 * delta;
  constexpr int kScan = 256;
  double best_x = 0.5 * delta, best_f = split_bound(row, best_x);
  int best_i = -1;
  for (int i = 0; i <= kScan; ++i) {
    const double x = lo_edge + (hi_edge - lo_edge) * i / kScan;
    const double fx = split_bound(row, x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
      best_i = i;
    }
  }
  if (best_i < 0) return best_x;
  double a = lo_edge + (hi_edge - lo_edge) * std::max(0, best_i - 1) / kScan;
  double b = lo_edge + (hi_edge - lo_edge) * std::min(kScan, best_i + 1) / kScan;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = split_bound(row, x1), f2 = split_bound(row, x2);
  while (b - a > 1e-6 * delta) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = split_bound(row, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = split_bound(row, x2);
    }
  }
  const double mid = 0.5 * (a + b);
  return split_bound(row, mid) <= best_f ? mid : best_x;
}

}  // namespace detail

/// Fills the norms of a bound row from an assembled form (E_loglr and delta must be set).
inline void optimize_bound(BoundRow& row, const LoglrQuadraticForm& form) {
  Matrix root = Matrix::Zero(form.Sw.rows(), form.Sw.cols());
  Eigen::Index at = 0;
  for (const auto& blk : form.Sw_blocks) {
    root.block(at, at, blk.rows(), blk.cols()) = linalg::psd_sqrt(blk);
    at += blk.rows();
  }
  row.linear_norm = (root * (form.L1 + 2.0 * form.L2s * form.mw)).norm();
  const Matrix M = root * form.L2s * root;
  row.quad_fro = M.norm();
  row.quad_op = linalg::spectral_norm(M);
  if (!(row.delta > 0.0)) {
    row.eps1 = row.eps2 = 0.0;
    row.linear_tail = row.quadratic_tail = row.total_bound = 1.0;
    return;
  }
  row.eps1 = detail::best_split(row);
  row.eps2 = row.delta - row.eps1;
  row.linear_tail = gaussian_linear_tail(row.linear_norm, row.eps1);
  row.quadratic_tail = hanson_wright_from_norms(row.quad_fro, row.quad_op, row.eps2);
  row.total_bound = std::min(1.0, row.linear_tail + row.quadratic_tail);
}

/// Analytical upper bound on P(log L*_t >= log U) (requires f^d == 0).
inline BoundRow detection_bound(const Model& model, const SolvedPolicy& pol, const StateMoments& mo,
                                const SprtConfig& cfg, int t) {
  const LoglrQuadraticForm form = assemble_tensors(model, pol, mo, t);
  BoundRow row;
  row.lambda = model.lambda();
  row.t = t;
  row.E_loglr = expected_loglr(model, pol, mo, t);
  row.delta = cfg.log_upper() - row.E_loglr;
  optimize_bound(row, form);
  return row;
}

inline std::vector<BoundRow> detection_bounds(const Model& model, const SolvedPolicy& pol, const SprtConfig& cfg) {
  const StateMoments mo = state_moments(model, pol);
  std::vector<BoundRow> rows;
  for (int t = 0; t <= model.horizon(); ++t) rows.push_back(detection_bound(model, pol, mo, cfg, t));
  return rows;
}

}  // namespace stealth_lqr
