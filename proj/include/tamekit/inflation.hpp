#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "tamekit/linear_core.hpp"
#include "tamekit/numerics.hpp"

namespace tamekit::inflation {

// Disk-bundle local model around the zero section. The base circle is
// parameterized by z in [0, 2pi), the fiber by radius r in [0, r_max].
// The four blocks assemble the structure J(z, r) = [[A, B], [C, D]] in the
// model frame; along r = 0 they must satisfy A = D = J0 and C = 0.
struct NormalModel {
  int self_intersection = 0;  // sign selects the coefficient formulas
  double r_max = 1.0;
  int n_r = 512;
  int n_theta = 64;
  int n_z = 128;
  std::function<Mat2(double z, double r)> a_block, b_block, c_block, d_block;

  Mat4 acs(double z, double r) const;
  // block metric sym(w2 A) + sym(w2 D); the norms behind the epsilon
  // estimates are taken in it
  Mat4 metric(double z, double r) const;
  std::vector<double> radial_grid() const;  // 0, then log-spaced to r_max
  std::vector<double> z_grid() const;       // uniform on [0, 2pi)
};

// Structural checks: blocks square to -Id pointwise, the r = 0 invariants
// hold, and the structure is tame along the zero section.
void validate_model(const NormalModel& model, double tol = 1e-9);

// canned models used by tests and the command-line scenarios
NormalModel compatible_model(int self_intersection = 0, double r_max = 1.0);
NormalModel constant_skew_model(double a, double b, int self_intersection = 0, double r_max = 1.0);
NormalModel fiber_twist_model(double c_norm, double r_max = 1.0);
// conjugates a constant-skew structure by a radius-proportional lower shear,
// which populates all four blocks
NormalModel sheared_model(double a, double b, double shear, int self_intersection = 0, double r_max = 1.0);

struct EpsilonPair {
  double eps1 = 0.0;          // bound on the half-norm of J0^T B in the block metric
  double eps2 = 0.0;          // bound on the half-norm of J0^T C divided by r
  double valid_radius = 0.0;  // largest radius where the bounds hold with eps1 < 1
};

// Sweeps the grid and returns the smallest bounds that hold at every point
// within valid_radius. Fails when no neighborhood of the zero section has
// eps1 < 1.
EpsilonPair estimate_epsilons(const NormalModel& model);

struct RadialProfile {
  double support_radius = 0.0;  // f holds its tail value from here on
  double plateau_radius = 0.0;  // f equals head exactly below this
  double head = 0.0;            // f(0)
  double tail = 0.0;            // 1 for the product case, 0 for the bundle cases
  double slope_budget = 0.0;    // bundle cases: -f'(r) * r stays at or below this
  bool non_increasing = false;
  std::vector<std::array<double, 3>> samples;  // (r, f, f')
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
};

// Product-case profile: plateau of height K tied off along the scaled
// ceiling (1-delta)(1-eps1)^2/(r^2 eps2^2), smoothed in log radius so the
// ceiling, the lower bound f >= 1 and monotonicity hold pointwise. K is
// solved by bisection so the area integral of (f-1) hits t_target within 1%.
RadialProfile build_profile_trivial(double t_target, const EpsilonPair& eps);

// Bundle-case profile for negative self-intersection -m: plateau M_prime,
// logarithmic descent band [R1, R2] sized so that
// eps2 * sqrt(r^2 + c) < (1-eps1) with c the descent rate in log radius.
RadialProfile build_profile_negative(int m, double m_prime, const EpsilonPair& eps);

// Same band shape without the head restriction, for demonstrating the
// positive-case obstruction; support stays below 1/sqrt(m).
RadialProfile build_profile_positive_demo(int m, double m_prime, const EpsilonPair& eps);

// ((1 - eps1^2)/eps1^2) / m: the ceiling the positive-case estimate chain
// puts on the head value.
double positive_case_bound(int m, double eps1);

struct FormField {
  int self_intersection = 0;
  std::vector<double> radii;
  std::vector<double> a, b;  // per-radius coefficients of the two blocks
  std::vector<Mat4> omega;   // assembled a*w2 (+) b*w2 per radius
};

// Inflated form along the radial grid. Product case: a = 1, b = f.
// Negative case: a = 1 - m f/(1 + m r^2/2), b = 1 - f'/r. Positive case:
// a = 1 + m f/(1 - m r^2/2), b = 1 - f'/r, rejected at r >= 1/sqrt(m).
FormField omega_f(const NormalModel& model, const RadialProfile& profile);

struct SweepRow {
  double z, r;
  double margin;      // eigen-margin of the inflated form against J
  double sufficient;  // slack of the closed-form criterion, positive = holds
};

struct InflationSweep {
  std::vector<SweepRow> rows;
  double min_margin = 0.0;
  double min_sufficient = 0.0;
  bool tame = false;              // every eigen-margin positive
  bool sufficient_holds = false;  // the closed-form criterion holds everywhere
  EpsilonPair eps;                // recomputed from the model
};

// Pointwise verification of the inflated form: exact eigen-margins in the
// model metric next to the closed-form sufficient criterion
// (product: 1 - eps1 - eps2 r sqrt(b); bundle: 1 - eps1 sqrt(a) - r eps2 sqrt(b)).
InflationSweep verify_tameness(const FormField& field, const NormalModel& model);

// Product case: area integral of (f - 1) over the supporting disk.
// Bundle cases: the head value f(0).
double class_shift(const RadialProfile& profile, const NormalModel& model);

struct TableRow {
  double r, f, f_prime, a, b, margin, sufficient;
};

// per-radius table (margins and criterion minimized over z), ready for CSV
std::vector<TableRow> margin_table(const FormField& field, const NormalModel& model,
                                   const RadialProfile& profile, const InflationSweep& sweep);

}  // namespace tamekit::inflation
