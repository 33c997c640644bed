#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stealth_lqr/errors.hpp"
#include "stealth_lqr/linalg.hpp"

namespace stealth_lqr {

/// Linear state-feedback law defining the alternative hypothesis:
/// beta_t = Fb[t] v_t + Fc[t] p_t + fd[t], for t = 0..T-1.
struct DeceptionPattern {
  std::vector<Matrix> Fb;
  std::vector<Matrix> Fc;
  std::vector<Vector> fd;
};

/// Raw problem data. State is x = (v, p) with v, p in R^n.
struct ProblemSpec {
  int n = 1;
  int T = 1;
  Matrix sigma_z2;  // covariance of the v-noise
  Matrix sigma_y2;  // covariance of the p-noise
  Vector x0;
  Matrix R_alpha, R_beta, R_v, T_v;
  std::vector<Vector> vbar;  // t = 0..T
  DeceptionPattern pattern;  // t = 0..T-1
  double lambda = 0.0;
};

/// Coefficients of the augmented running cost
///   h_t(x, u) = 1/2 x'Qx + 1/2 u'Ru + x'Nu + q'x + r'u + d.
struct StageCoefficients {
  Matrix Q;
  Matrix R;
  Matrix N;
  Vector q;
  Vector r;
  double d = 0.0;
};

/// A = [[I, 0], [I, I]]: v integrates alpha, p integrates v + beta.
inline Matrix transition_matrix(int n) {
  Matrix a = Matrix::Identity(2 * n, 2 * n);
  a.block(n, 0, n, n) = Matrix::Identity(n, n);
  return a;
}

inline Matrix input_matrix(int n) { return Matrix::Identity(2 * n, 2 * n); }

class Model;
Model validate_spec(ProblemSpec spec);

/// A validated problem instance with cached factorizations. Immutable.
class Model {
 public:
  const ProblemSpec& spec() const { return spec_; }
  int n() const { return spec_.n; }
  int horizon() const { return spec_.T; }
  int state_dim() const { return 2 * spec_.n; }
  double lambda() const { return spec_.lambda; }

  const Matrix& sigma_y2_inv() const { return sigma_y2_inv_; }
  /// R = diag(R_alpha, R_beta).
  const Matrix& control_weight() const { return control_weight_; }
  const Matrix& control_weight_inv() const { return control_weight_inv_; }
  /// Sigma_w = diag(Sigma_z^2, Sigma_y^2).
  const Matrix& noise_cov() const { return noise_cov_; }
  /// Lower Cholesky factors of Sigma_z^2 and Sigma_y^2 used for sampling.
  const Matrix& chol_z() const { return chol_z_; }
  const Matrix& chol_y() const { return chol_y_; }
  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }

  /// True when the pattern offset fd is identically zero.
  bool offset_free() const {
    for (const auto& f : spec_.pattern.fd)
      if (f.cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
  }

  /// Same instance at another deception intensity.
  Model with_lambda(double lambda) const {
    ProblemSpec s = spec_;
    s.lambda = lambda;
    return validate_spec(std::move(s));
  }

 private:
  friend Model validate_spec(ProblemSpec spec);
  Model() = default;

  ProblemSpec spec_;
  Matrix sigma_y2_inv_;
  Matrix control_weight_;
  Matrix control_weight_inv_;
  Matrix noise_cov_;
  Matrix chol_z_;
  Matrix chol_y_;
  Matrix a_;
  Matrix b_;
};

namespace detail {

inline void require_shape(const Matrix& m, int rows, int cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw ValidationError(os.str());
  }
}

inline void require_size(const Vector& v, int size, const std::string& name) {
  if (v.size() != size) {
    std::ostringstream os;
    os << name << ": expected length " << size << ", got " << v.size();
    throw ValidationError(os.str());
  }
}

inline void require_spd(const Matrix& m, int n, const std::string& name) {
  require_shape(m, n, n, name);
  if (!m.allFinite()) throw ValidationError(name + ": non-finite entries");
  if (!linalg::is_symmetric(m)) throw ValidationError(name + ": matrix is not symmetric");
  const double lo = linalg::min_eigenvalue(m);
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << name << ": matrix is not positive definite (smallest eigenvalue " << lo << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace detail

/// Checks every ProblemSpec invariant and builds the cached factorizations.
/// Weight and covariance matrices are stored exactly symmetrized.
inline Model validate_spec(ProblemSpec spec) {
  const int n = spec.n;
  const int T = spec.T;
  if (n < 1) throw ValidationError("n must be a positive integer");
  if (T < 0) throw ValidationError("T must be nonnegative");

  detail::require_spd(spec.sigma_z2, n, "sigma_z2");
  detail::require_spd(spec.sigma_y2, n, "sigma_y2");
  detail::require_spd(spec.R_alpha, n, "R_alpha");
  detail::require_spd(spec.R_beta, n, "R_beta");
  detail::require_spd(spec.R_v, n, "R_v");
  detail::require_spd(spec.T_v, n, "T_v");
  detail::require_size(spec.x0, 2 * n, "x0");
  if (!spec.x0.allFinite()) throw ValidationError("x0: non-finite entries");

  if (static_cast<int>(spec.vbar.size()) != T + 1) {
    std::ostringstream os;
    os << "vbar: length must be T+1=" << T + 1 << ", got " << spec.vbar.size();
    throw ValidationError(os.str());
  }
  for (std::size_t t = 0; t < spec.vbar.size(); ++t)
    detail::require_size(spec.vbar[t], n, "vbar[" + std::to_string(t) + "]");

  const auto& pat = spec.pattern;
  if (static_cast<int>(pat.Fb.size()) != T || static_cast<int>(pat.Fc.size()) != T ||
      static_cast<int>(pat.fd.size()) != T) {
    std::ostringstream os;
    os << "pattern: Fb, Fc, fd must all have length T=" << T << ", got " << pat.Fb.size() << ", "
       << pat.Fc.size() << ", " << pat.fd.size();
    throw ValidationError(os.str());
  }
  for (int t = 0; t < T; ++t) {
    detail::require_shape(pat.Fb[t], n, n, "pattern.Fb[" + std::to_string(t) + "]");
    detail::require_shape(pat.Fc[t], n, n, "pattern.Fc[" + std::to_string(t) + "]");
    detail::require_size(pat.fd[t], n, "pattern.fd[" + std::to_string(t) + "]");
    if (!pat.Fb[t].allFinite() || !pat.Fc[t].allFinite() || !pat.fd[t].allFinite())
      throw ValidationError("pattern: non-finite entries at t=" + std::to_string(t));
  }
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
    throw ValidationError("lambda must be a finite nonnegative number");

  for (Matrix* m : {&spec.sigma_z2, &spec.sigma_y2, &spec.R_alpha, &spec.R_beta, &spec.R_v, &spec.T_v})
    *m = linalg::symmetrize(*m);

  Model model;
  model.sigma_y2_inv_ = linalg::spd_inverse(spec.sigma_y2);
  model.control_weight_ = linalg::block_diag({spec.R_alpha, spec.R_beta});
  model.control_weight_inv_ = linalg::block_diag({linalg::spd_inverse(spec.R_alpha), linalg::spd_inverse(spec.R_beta)});
  model.noise_cov_ = linalg::block_diag({spec.sigma_z2, spec.sigma_y2});
  model.chol_z_ = linalg::cholesky_lower(spec.sigma_z2);
  model.chol_y_ = linalg::cholesky_lower(spec.sigma_y2);
  model.a_ = transition_matrix(n);
  model.b_ = input_matrix(n);
  model.spec_ = std::move(spec);
  return model;
}

/// Augmented running-cost coefficients at step t in [0, T-1].
inline StageCoefficients stage_coefficients(const Model& model, int t) {
  const auto& s = model.spec();
  if (t < 0 || t >= s.T)
    throw ValidationError("stage_coefficients: t=" + std::to_string(t) + " outside [0, " +
                          std::to_string(s.T - 1) + "]");
  const int n = s.n;
  const double lam = s.lambda;
  const Matrix& syi = model.sigma_y2_inv();
  const Matrix& fb = s.pattern.Fb[t];
  const Matrix& fc = s.pattern.Fc[t];
  const Vector& fd = s.pattern.fd[t];
  const Vector& vb = s.vbar[t];

  StageCoefficients c;
  c.Q = Matrix::Zero(2 * n, 2 * n);
  c.Q.topLeftCorner(n, n) = s.R_v + lam * fb.transpose() * syi * fb;
  c.Q.topRightCorner(n, n) = lam * fb.transpose() * syi * fc;
  c.Q.bottomLeftCorner(n, n) = lam * fc.transpose() * syi * fb;
  c.Q.bottomRightCorner(n, n) = lam * fc.transpose() * syi * fc;
  c.Q = linalg::symmetrize(c.Q);

  c.R = model.control_weight();

  c.N = Matrix::Zero(2 * n, 2 * n);
  c.N.topRightCorner(n, n) = -lam * fb.transpose() * syi;
  c.N.bottomRightCorner(n, n) = -lam * fc.transpose() * syi;

  c.q = Vector::Zero(2 * n);
  c.q.head(n) = -s.R_v * vb + lam * fb.transpose() * syi * fd;
  c.q.tail(n) = lam * fc.transpose() * syi * fd;

  c.r = Vector::Zero(2 * n);
  c.r.tail(n) = -lam * syi * fd;

  c.d = 0.5 * vb.dot(s.R_v * vb) + 0.5 * lam * fd.dot(syi * fd);
  return c;
}

}  // namespace stealth_lqr
