#pragma once

// Independent reference computations used only by tests. Nothing here calls the
// solver's recursions; quantities are evaluated from the raw problem definition.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "stealth_lqr/model.hpp"

namespace stealth_lqr::oracle {

/// Augmented running cost h_t(x, u) straight from its definition: primary running
/// cost plus lambda/2 (|beta - mu|^2 - |beta|^2) in the (Sigma_y^2)^{-1} norm.
inline double running_cost_direct(const ProblemSpec& s, int t, const Vector& x, const Vector& u) {
  const int n = s.n;
  const Vector v = x.head(n), p = x.tail(n);
  const Vector alpha = u.head(n), beta = u.tail(n);
  const Vector dv = v - s.vbar[t];
  const Matrix syi = s.sigma_y2.inverse();
  const Vector mu = s.pattern.Fb[t] * v + s.pattern.Fc[t] * p + s.pattern.fd[t];
  const Vector diff = beta - mu;
  return 0.5 * alpha.dot(s.R_alpha * alpha) + 0.5 * beta.dot(s.R_beta * beta) + 0.5 * dv.dot(s.R_v * dv) +
         0.5 * s.lambda * (diff.dot(syi * diff) - beta.dot(syi * beta));
}

inline double terminal_cost_direct(const ProblemSpec& s, const Vector& x) {
  const Vector dv = x.head(s.n) - s.vbar[s.T];
  return 0.5 * dv.dot(s.T_v * dv);
}

/// Scalar (n = 1, lambda = 0) Riccati iteration of the velocity block:
/// rho_T = T_v, rho_t = R_v + R_alpha rho_{t+1} / (R_alpha + rho_{t+1}).
inline std::vector<double> scalar_rho(double R_v, double R_alpha, double T_v, int T) {
  std::vector<double> rho(T + 1);
  rho[T] = T_v;
  for (int t = T - 1; t >= 0; --t) rho[t] = R_v + R_alpha * rho[t + 1] / (R_alpha + rho[t + 1]);
  return rho;
}

/// 3-point Gauss-Hermite rule for E f(Z), Z ~ N(0, 1); exact for polynomials of degree <= 5.
struct GaussHermite3 {
  std::array<double, 3> node{-std::sqrt(3.0), 0.0, std::sqrt(3.0)};
  std::array<double, 3> weight{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
};

/// Minimizes f over a 2-D box by successively refined uniform grids.
template <typename F>
double grid_min_2d(const F& f, double half_width, double coarse_step,
                          int refinements, double* arg_a = nullptr, double* arg_b = nullptr) {
  double ca = 0.0, cb = 0.0, hw = half_width, step = coarse_step;
  double best = f(0.0, 0.0);
  for (int level = 0; level <= refinements; ++level) {
    const int k = static_cast<int>(std::round(hw / step));
    double ba = ca, bb = cb;
    for (int i = -k; i <= k; ++i)
      for (int j = -k; j <= k; ++j) {
        const double a = ca + i * step, b = cb + j * step;
        const double val = f(a, b);
        if (val < best) {
          best = val;
          ba = a;
          bb = b;
        }
      }
    ca = ba;
    cb = bb;
    hw = step;
    step /= 10.0;
  }
  if (arg_a) *arg_a = ca;
  if (arg_b) *arg_b = cb;
  return best;
}

/// Exhaustive-grid dynamic programming for n = 1. Value tables live on a uniform
/// (v, p) grid with bilinear interpolation; expectations use Gauss-Hermite
/// quadrature on each noise component; minimization scans a refined control grid.
class GridDP {
 public:
  struct Grid {
    double v_lo = -2.0, v_hi = 4.0, p_lo = 1.0, p_hi = 11.0, h = 0.1;
    double control_half_width = 4.0, control_step = 0.5;
    int control_refinements = 2;
  };

  GridDP(ProblemSpec spec, Grid grid) : s_(std::move(spec)), g_(grid) {
    nv_ = static_cast<int>(std::round((g_.v_hi - g_.v_lo) / g_.h)) + 1;
    np_ = static_cast<int>(std::round((g_.p_hi - g_.p_lo) / g_.h)) + 1;
    sz_ = std::sqrt(s_.sigma_z2(0, 0));
    sy_ = std::sqrt(s_.sigma_y2(0, 0));
  }

  /// V_0(x0) by backward tabulation of V_{T-1}, ..., V_1.
  double value_at_start() {
    std::vector<double> next;  // empty: use the terminal cost
    for (int t = s_.T - 1; t >= 1; --t) {
      std::vector<double> table(static_cast<std::size_t>(nv_) * np_);
      for (int i = 0; i < nv_; ++i)
        for (int j = 0; j < np_; ++j) {
          Vector x(2);
          x << g_.v_lo + i * g_.h, g_.p_lo + j * g_.h;
          table[static_cast<std::size_t>(i) * np_ + j] = bellman(t, x, next);
        }
      next = std::move(table);
    }
    return bellman(0, s_.x0, next);
  }

  /// min_u h_t(x,u) + E V_{t+1}(Ax + u + w) with V_{t+1} given by `next` (or g if empty).
  double bellman(int t, const Vector& x, const std::vector<double>& next) const {
    const double v = x[0], p = x[1];
    const double ra = s_.R_alpha(0, 0), rb = s_.R_beta(0, 0), rv = s_.R_v(0, 0), tv = s_.T_v(0, 0);
    const double syi = 1.0 / s_.sigma_y2(0, 0), lam = s_.lambda;
    const double mu = s_.pattern.Fb[t](0, 0) * v + s_.pattern.Fc[t](0, 0) * p + s_.pattern.fd[t][0];
    const double dv = v - s_.vbar[t][0];
    const double vbar_T = s_.vbar[s_.T][0];
    auto objective = [&](double a, double b) {
      const double run = 0.5 * ra * a * a + 0.5 * rb * b * b + 0.5 * rv * dv * dv +
                         0.5 * lam * syi * ((b - mu) * (b - mu) - b * b);
      const double vn = v + a;
      const double pn = v + p + b;
      double ev = 0.0;
      for (int qi = 0; qi < 3; ++qi)
        for (int qj = 0; qj < 3; ++qj) {
          const double yv = vn + sz_ * gh_.node[qi], yp = pn + sy_ * gh_.node[qj];
          const double val = next.empty() ? 0.5 * tv * (yv - vbar_T) * (yv - vbar_T) : interpolate(next, yv, yp);
          ev += gh_.weight[qi] * gh_.weight[qj] * val;
        }
      return run + ev;
    };
    return grid_min_2d(objective, g_.control_half_width, g_.control_step, g_.control_refinements);
  }

 private:
  double interpolate(const std::vector<double>& table, double yv, double yp) const {
    const double fv = std::clamp((yv - g_.v_lo) / g_.h, 0.0, nv_ - 1.000001);
    const double fp = std::clamp((yp - g_.p_lo) / g_.h, 0.0, np_ - 1.000001);
    const int i = static_cast<int>(fv), j = static_cast<int>(fp);
    const double a = fv - i, b = fp - j;
    auto at = [&](int ii, int jj) { return table[static_cast<std::size_t>(ii) * np_ + jj]; };
    return (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) + a * b * at(i + 1, j + 1);
  }

  ProblemSpec s_;
  Grid g_;
  int nv_ = 0, np_ = 0;
  double sz_ = 0.0, sy_ = 0.0;
  GaussHermite3 gh_;
};

/// Running mean / standard error accumulator.
struct MeanAccumulator {
  long long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

}  // namespace stealth_lqr::oracle
