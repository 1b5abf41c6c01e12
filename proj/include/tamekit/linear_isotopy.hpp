#pragma once

#include <vector>

#include "tamekit/numerics.hpp"

namespace tamekit::linear_isotopy {

// Skew block of an upper-triangular structure, expressed in a unitary frame.
// Shape is [[a, b], [b, -a]] and n = sqrt(a^2 + b^2) < 2.
struct IsotopyContext {
  Mat2 b;
  double n;
};

IsotopyContext make_context(const Mat2& b, double tol = 1e-9);
IsotopyContext make_context(double a, double b);

struct IsotopyStep {
  double t;
  Mat4 psi;
  Mat4 psi_inverse;
  Mat4 pulled_j;  // psi_inverse * J_B * psi
  double n_of_t;  // |1-2t| alpha(t) n
};

// (1 - n^2 t(1-t))^{-1/2}; finite on all of [0,1] exactly when n < 2.
double alpha(double t, double n);

// The fiber deformation at time t: (u, v) -> (u + alpha t J0 B v, alpha v).
IsotopyStep psi(const IsotopyContext& ctx, double t);

// ||psi_t - Id|| by maximization over the unit sphere. Because the skew
// block has both singular values equal to n, the closed form
// sqrt((alpha-1)^2 + (t n alpha)^2) is attained; checked internally.
double psi_norm_defect(const IsotopyContext& ctx, double t);

// ||psi_t o psi_{t'}^{-1} - Id|| by direct maximization, t' <= t.
double composition_defect(const IsotopyContext& ctx, double t_prime, double t);

// (1-t) omega + t J_B^T omega J_B; psi_t pulls it back to omega.
Mat4 omega_of_t(const IsotopyContext& ctx, double t);

struct TimePartition {
  std::vector<double> times;  // 0 = t_0 < ... < t_d = 1/2
  double step;                // uniform spacing 1/(2d)
  double step_bound;          // (epsilon/sqrt(2)) (1/n_max - 1/2)
  int steps;                  // d
};

// Uniform partition of [0, 1/2] with spacing at 95% of the defect bound,
// so each consecutive composition defect stays under epsilon for every
// skew block of norm up to n_max. The margin absorbs the maximizer's
// slack; the guarantee is re-checked against the worst-case block.
TimePartition time_partition(double n_max, double epsilon);

}  // namespace tamekit::linear_isotopy
