#pragma once

#include "stealth_lqr/model.hpp"

namespace stealth_lqr::presets {

/// Scalar double integrator used throughout the experiments: n = 1, T = 20,
/// unit tracking weights, R_beta = 10, noise variances 0.05, reference v_t = 1 - t/T,
/// pattern Fb = 0.5, Fc = -0.1, fd = 0.
inline ProblemSpec scalar_reference(double lambda = 0.0, int T = 20) {
  ProblemSpec s;
  s.n = 1;
  s.T = T;
  auto scalar = [](double v) { return Matrix::Constant(1, 1, v); };
  s.sigma_z2 = scalar(0.05);
  s.sigma_y2 = scalar(0.05);
  s.x0 = Vector(2);
  s.x0 << 1.0, 4.0;
  s.R_alpha = scalar(1.0);
  s.R_beta = scalar(10.0);
  s.R_v = scalar(1.0);
  s.T_v = scalar(1.0);
  for (int t = 0; t <= T; ++t) s.vbar.push_back(Vector::Constant(1, 1.0 - static_cast<double>(t) / T));
  s.pattern.Fb.assign(T, scalar(0.5));
  s.pattern.Fc.assign(T, scalar(-0.1));
  s.pattern.fd.assign(T, Vector::Zero(1));
  s.lambda = lambda;
  return s;
}

}  // namespace stealth_lqr::presets
