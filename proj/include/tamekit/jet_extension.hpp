#pragma once

#include <array>
#include <functional>
#include <vector>

#include "tamekit/numerics.hpp"

namespace tamekit::jet_extension {

// Tubular model around a circle: points are (x, y, v1, v2) with the circle
// sitting at v = 0, all data periodic in x and constant in y. The grid
// controls where the built-in verification sweeps sample.
struct CircleGrid {
  int n_z = 256;
  double tube_radius = 1.0;
  int n_v = 16;  // radial resolution of the verification sweeps
  std::vector<double> zs() const;
};

// Cutoff profile: 1 near 0, support inside [0, radius], non-increasing,
// |derivative| strictly below 2/radius. The family is self-similar: scaling
// radius and argument together reproduces the same values.
struct BumpProfile {
  double radius = 0.0;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::vector<std::array<double, 3>> samples;  // (x, value, derivative)
};

BumpProfile bump_profile(double radius);

// 1-jet of a fiber-valued section along the circle, vanishing in the
// tangential directions: F(z) acts on normal coordinates. The optional
// callables carry the consistency data of a 2-jet; when supplied they are
// checked (symmetry of the quadratic part, tangential derivative matching
// the derivative of F) before use.
struct JetData {
  std::function<Mat2(double)> normal_part;
  std::function<Mat2(double)> tangent_derivative;                // d/dz of normal_part
  std::function<std::array<Mat2, 2>(double)> normal_hessian;     // one symmetric block per output
};

struct ExtensionBounds {
  double k = 0.0;       // sup of the jet norm along the circle
  double c = 0.0;       // growth rate of the jet data along the circle
  double radius = 0.0;  // support radius actually used, kept below k/c
};

struct SectionField {
  std::function<Vec2(double z, const Vec2& v)> value;
  // columns: d/dz, d/dv1, d/dv2
  std::function<Eigen::Matrix<double, 2, 3>(double z, const Vec2& v)> gradient;
  ExtensionBounds bounds;
  BumpProfile bump;
};

// Cut-off Taylor extension of the jet: the value vanishes on the circle,
// its differential there reproduces the jet exactly, the support stays in
// the tube, and the sweep checks |value| <= 2 k r and |gradient| <= 6 k.
// With blend_charts the same construction runs in two overlapping charts
// glued by a partition of unity, which must reproduce the one-chart field.
SectionField extend_section(const JetData& jet, double radius, const CircleGrid& grid,
                            bool blend_charts = false);

// Fiberwise automorphism along the circle in block form [[I, S], [0, Q]]:
// identity on the tangential pair, S shears normal into tangential, Q acts
// on the normal pair. The _dz callables are optional analytic derivatives;
// finite differences stand in when they are absent.
struct DiffeoJet {
  std::function<Mat2(double)> tangential_shift;  // S
  std::function<Mat2(double)> normal_block;      // Q
  std::function<Mat2(double)> tangential_shift_dz;
  std::function<Mat2(double)> normal_block_dz;
};

struct DiffeoExtension {
  std::function<Vec4(const Vec4&)> map;
  std::function<Mat4(const Vec4&)> jacobian;  // analytic
  std::function<Vec4(const Vec4&)> inverse;   // Newton; trustworthy when invertible
  double input_defect = 0.0;     // sup along the circle of |Phi - Id|
  double c0_displacement = 0.0;  // sup over the sweep of |psi(p) - p|
  double c1_defect = 0.0;        // sup over the sweep of |dpsi - Id|
  double jacobian_min = 0.0;     // smallest determinant seen on the sweep
  bool invertible = false;       // no nonpositive determinant on the sweep
  double support_radius = 0.0;
};

// Graph-type extension psi(x, y, v) = ((x,y) + rho(|v|) S(x) v,
// v + rho(|v|)(Q(x) - I) v): fixes the circle pointwise, has differential
// [[I, S], [0, Q]] there, and is the identity outside the tube. A requested
// displacement bound is met by passing a small enough radius.
DiffeoExtension extend_diffeo(const DiffeoJet& jet, double radius, const CircleGrid& grid);

struct Calibration {
  double epsilon_0 = 0.0;  // largest input defect the battery survives
  double kappa = 0.0;      // measured output/input defect ratio, in [1, 6]
};

// Randomized battery of jets at increasing defect levels; epsilon_0 is the
// largest level at which every extension stays invertible, kappa the worst
// measured amplification up to that level.
Calibration calibrate_constants(const CircleGrid& grid, unsigned seed = 2024);

}  // namespace tamekit::jet_extension
