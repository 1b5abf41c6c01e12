#include "tamekit/linear_isotopy.hpp"

#include <cmath>
#include <stdexcept>

#include "tamekit/linear_core.hpp"

namespace tamekit::linear_isotopy {

namespace {

void require_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time must lie in [0, 1]");
}

Mat4 upper_block(const Mat2& top_right, double diag_scale) {
  Mat4 m = Mat4::Identity();
  m.block<2, 2>(0, 2) = top_right;
  m.block<2, 2>(2, 2) = diag_scale * Mat2::Identity();
  return m;
}

}  // namespace

IsotopyContext make_context(const Mat2& b, double tol) {
  if (std::abs(b(0, 0) + b(1, 1)) > tol || std::abs(b(0, 1) - b(1, 0)) > tol)
    throw std::invalid_argument("skew block must have shape [[a, b], [b, -a]]");
  const double n = std::hypot(b(0, 0), b(0, 1));
  if (n >= 2.0)
    throw std::invalid_argument("skew norm must be below 2; the deformation is undefined at t = 1/2 otherwise");
  return {b, n};
}

IsotopyContext make_context(double a, double b) {
  return make_context(linear_core::skew_block(a, b), 0.0);
}

double alpha(double t, double n) {
  require_time(t);
  if (n < 0.0) throw std::invalid_argument("skew norm must be nonnegative");
  if (n >= 2.0) throw std::invalid_argument("skew norm must be below 2");
  return 1.0 / std::sqrt(1.0 - n * n * t * (1.0 - t));
}

IsotopyStep psi(const IsotopyContext& ctx, double t) {
  require_time(t);
  const double a = alpha(t, ctx.n);
  const Mat2 j0 = standard_j2();
  IsotopyStep s;
  s.t = t;
  s.psi = upper_block(a * t * j0 * ctx.b, a);
  s.psi_inverse = upper_block(-t * j0 * ctx.b, 1.0 / a);
  const Mat4 j_b = linear_core::block_acs(ctx.b);
  s.pulled_j = s.psi_inverse * j_b * s.psi;
  s.n_of_t = std::abs(1.0 - 2.0 * t) * a * ctx.n;
  return s;
}

double psi_norm_defect(const IsotopyContext& ctx, double t) {
  const IsotopyStep s = psi(ctx, t);
  const double measured = operator_norm(Mat4(s.psi - Mat4::Identity()));
  const double a = alpha(t, ctx.n);
  const double closed = std::hypot(a - 1.0, t * ctx.n * a);
  if (measured > closed + 1e-9)
    throw std::logic_error("deformation defect exceeded its closed-form value");
  return measured;
}

double composition_defect(const IsotopyContext& ctx, double t_prime, double t) {
  if (!(t_prime <= t)) throw std::invalid_argument("times must be ordered t_prime <= t");
  const IsotopyStep hi = psi(ctx, t);
  const IsotopyStep lo = psi(ctx, t_prime);
  return operator_norm(Mat4(hi.psi * lo.psi_inverse - Mat4::Identity()));
}

Mat4 omega_of_t(const IsotopyContext& ctx, double t) {
  require_time(t);
  const Mat4 omega = standard_omega();
  const Mat4 j_b = linear_core::block_acs(ctx.b);
  return (1.0 - t) * omega + t * (j_b.transpose() * omega * j_b);
}

TimePartition time_partition(double n_max, double epsilon) {
  if (!(n_max > 0.0 && n_max < 2.0)) throw std::invalid_argument("skew norm bound must lie in (0, 2)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("defect budget must be positive");
  const double bound = (epsilon / std::sqrt(2.0)) * (1.0 / n_max - 0.5);
  const double target = 0.95 * bound;
  const int d = std::max(1, static_cast<int>(std::ceil(0.5 / target)));
  TimePartition p;
  p.steps = d;
  p.step = 0.5 / d;
  p.step_bound = bound;
  p.times.resize(d + 1);
  for (int i = 0; i <= d; ++i) p.times[i] = 0.5 * i / d;
  p.times.back() = 0.5;

  // the defect grows with the skew norm, so checking the extreme block covers
  // every context the partition will be used with
  const IsotopyContext worst = make_context(n_max, 0.0);
  for (int i = 0; i < d; ++i) {
    if (composition_defect(worst, p.times[i], p.times[i + 1]) >= epsilon)
      throw std::logic_error("partition step failed its defect budget");
  }
  return p;
}

}  // namespace tamekit::linear_isotopy
