#pragma once

#include <vector>

#include "stealth_lqr/linalg.hpp"

namespace stealth_lqr {

/// One realized closed-loop path.
struct Trajectory {
  std::vector<Vector> x;       // states, t = 0..T
  std::vector<Vector> u;       // controls (alpha, beta), t = 0..T-1
  std::vector<Vector> w;       // noises (Z, Y), t = 0..T-1
  double primary_cost = 0.0;
  std::vector<double> loglr;   // log L_t, t = 0..T

  int horizon() const { return static_cast<int>(u.size()); }
};

}  // namespace stealth_lqr
