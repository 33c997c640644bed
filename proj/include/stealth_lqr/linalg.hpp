#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "stealth_lqr/errors.hpp"

namespace stealth_lqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline constexpr double kSymmetryTol = 1e-12;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Smallest eigenvalue of the symmetric part of `m`.
inline double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Square root of a symmetric PSD matrix via eigendecomposition.
/// Eigenvalues down to -tol are clamped to zero; anything more negative throws.
inline Matrix psd_sqrt(const Matrix& m, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol * scale)
      throw NumericalError("psd_sqrt: matrix has eigenvalue " + std::to_string(ev[i]));
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

/// Inverse square root of a symmetric PD matrix.
inline Matrix spd_inv_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw NumericalError("spd_inv_sqrt: matrix is not positive definite");
  return symmetrize(es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose());
}

/// Inverse of a symmetric PD matrix through its Cholesky factor.
inline Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("spd_inverse: Cholesky failed");
  return symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

/// Lower Cholesky factor L with m = L L^T.
inline Matrix cholesky_lower(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("cholesky_lower: matrix is not positive definite");
  return llt.matrixL();
}

/// 2-condition number of a symmetric matrix from its eigenvalues (inf if singular).
inline double spd_condition(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Spectral norm by power iteration on M^T M.
/// Stops when the Rayleigh quotient changes by less than `tol` (relative) or after
/// `10 * dim` iterations (at least 50).
inline double spectral_norm(const Matrix& m, double tol = 1e-10) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.transpose() * m;
  const Eigen::Index dim = gram.rows();
  if (gram.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // Deterministic, non-degenerate start: unit weights perturbed by index.
  Vector x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) x[i] = 1.0 + 0.01 * static_cast<double>(i + 1) / static_cast<double>(dim);
  x.normalize();
  double rq = x.dot(gram * x);
  const long cap = std::max<long>(50, 10 * static_cast<long>(dim));
  for (long it = 0; it < cap; ++it) {
    Vector y = gram * x;
    const double ny = y.norm();
    if (ny == 0.0) break;
    x = y / ny;
    const double next = x.dot(gram * x);
    const bool done = std::abs(next - rq) <= tol * std::max(next, 1e-300);
    rq = next;
    if (done) break;
  }
  return std::sqrt(std::max(rq, 0.0));
}

/// Block-diagonal matrix from square blocks.
inline Matrix block_diag(const std::vector<Matrix>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  Matrix out = Matrix::Zero(total, total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace linalg
}  // namespace stealth_lqr
