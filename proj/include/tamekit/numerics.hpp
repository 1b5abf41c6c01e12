#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

// Shared numeric kernel: fixed-size matrix aliases, deterministic sampling,
// operator-norm evaluation and one-dimensional quadrature/smoothing helpers.

namespace tamekit {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

constexpr double kPi = 3.141592653589793238462643383279502884;

// Rotation by +90 degrees: the standard planar complex structure.
inline Mat2 standard_j2() {
  Mat2 m;
  m << 0.0, -1.0, 1.0, 0.0;
  return m;
}

// Standard planar area form, area(e1, e2) = +1.  Equals standard_j2()^T.
inline Mat2 standard_area_form() { return standard_j2().transpose(); }

// Block-diagonal extensions to R^4 = R^2 + R^2.
Mat4 standard_omega();  // area ⊕ area
Mat4 standard_acs();    // j2 ⊕ j2

// Tolerance tiers used throughout the checks:
//   structural -> identities that hold to rounding error,
//   derived    -> closed-form consequences,
//   sampled    -> grid or sampling based estimates.
struct Tolerances {
  double structural = 1e-12;
  double derived = 1e-9;
  double sampled = 1e-6;
};

// Deterministic xoshiro256** generator. Self-contained so that seeded runs
// produce identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds
  // Standard normal via Box-Muller on the deterministic stream.
  double normal();
  Vec4 unit_vec4();

 private:
  std::uint64_t s_[4];
};

// Low-discrepancy points on the unit 3-sphere: additive lattice driven by the
// plastic constant, pushed through cylindrical coordinates. Deterministic.
std::vector<Vec4> lattice_sphere3(int n);

// Largest |M v| over euclidean-unit v: best-of-samples start followed by a
// gradient-free pattern polish on the sphere. Slightly under-estimates the
// true value, never over-estimates it.
double operator_norm(const Mat4& m, int samples = 192, int polish_iters = 64);
double operator_norm(const Mat2& m, int samples = 64, int polish_iters = 48);

// Exact spectral norm of a 2x2 matrix (closed form).
double spectral_norm(const Mat2& m);

// Symmetric part.
template <typename Derived>
auto sym(const Eigen::MatrixBase<Derived>& m) {
  return (0.5 * (m.eval() + m.eval().transpose())).eval();
}

// Composite Simpson integration of f over [a, b] with n subintervals
// (n rounded up to even).
double simpson(const std::function<double(double)>& f, double a, double b,
               int n);

// Continuous piecewise-affine function of one variable, constant outside the
// breakpoint range.
struct PiecewiseAffine {
  std::vector<double> x;  // strictly increasing breakpoints
  std::vector<double> y;  // values at the breakpoints

  double value(double t) const;
  // One-sided slope, taken from the interval containing t (0 outside).
  double slope(double t) const;
};

// Convolution of a piecewise-affine base with a compactly supported smooth
// bump kernel of the given half-width. Used to round off profile corners
// while preserving affine majorants and slope bounds exactly.
class SmoothedShape {
 public:
  SmoothedShape() = default;
  SmoothedShape(PiecewiseAffine base, double width);

  double value(double t) const;
  double derivative(double t) const;
  double width() const { return width_; }
  const PiecewiseAffine& base() const { return base_; }

 private:
  PiecewiseAffine base_;
  double width_ = 0.0;
  // Normalized C-infinity bump kernel tabulated on [-1, 1].
  std::vector<double> nodes_;
  std::vector<double> weights_;  // Simpson weights * kernel values
};

}  // namespace tamekit
