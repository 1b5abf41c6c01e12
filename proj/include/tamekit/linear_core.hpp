#pragma once

#include "tamekit/numerics.hpp"

// Linear algebra of taming and compatible pairs on R^4: a 2-form versus an
// almost complex structure, the invariance involution and its averaging
// projection, splitting along an invariant 2-plane, unitary frames, the skew
// block and its norm, and tameness margins.

namespace tamekit::linear_core {

using TwoForm = Mat4;    // antisymmetric
using AcsMatrix = Mat4;  // squares to -Id

// Splitting of R^4 into an invariant 2-plane and its form-orthogonal
// complement, with the restricted structures expressed in the chosen bases.
struct SplitData {
  Mat42 v1_basis;  // columns span the invariant plane
  Mat42 v2_basis;  // columns span the form-orthogonal complement
  Mat2 j1;         // structure restricted to the plane, in v1 coordinates
  Mat2 j2;         // complement factor, in v2 coordinates
  Mat2 b;          // skew block: complement -> plane component of the structure
  Mat4 g;          // canonical metric, ambient coordinates (symmetric positive)
};

// Off-diagonal block in a unitary frame; n is its operator norm.
struct SkewPart {
  double a = 0.0;
  double b = 0.0;
  double n = 0.0;
  bool tame() const { return n < 2.0; }
};

struct TamenessReport {
  double margin = 0.0;             // minimum over evaluation points
  int argmin_point = 0;
  Vec4 argmin_vector = Vec4::Zero();  // unit length in the reference metric
  std::vector<std::pair<int, double>> per_point;
};

// Throws unless J * J = -Id within tol (max-entry norm).
const AcsMatrix& validate_acs(const AcsMatrix& j, double tol = 1e-12);

// Throws unless omega is antisymmetric within tol.
const TwoForm& validate_two_form(const TwoForm& omega, double tol = 1e-12);

// True when the form is preserved by the structure: J^T omega J = omega.
bool is_invariant(const TwoForm& omega, const AcsMatrix& j, double tol = 1e-12);

// True when omega(v, Jv) > 0 for all v != 0.
bool is_tame(const TwoForm& omega, const AcsMatrix& j);

// The involution omega -> omega(J ., J .) on forms taming J.
// Throws when the input does not tame J.
TwoForm iota(const TwoForm& omega, const AcsMatrix& j);

// Averaging projection onto the invariant forms: (omega + iota(omega)) / 2.
TwoForm compat_projection(const TwoForm& omega, const AcsMatrix& j);

// Splits along the plane spanned by the columns of v1_basis. The plane must
// be J-invariant and the form must restrict non-degenerately to it; the
// complement is computed as the form-orthogonal subspace.
SplitData split(const TwoForm& omega, const AcsMatrix& j, const Mat42& v1_basis,
                double tol = 1e-9);

// As split(), but with both subspace bases supplied (columns 0-1 span the
// plane, columns 2-3 its complement); checks form-orthogonality of the pair.
SplitData split_in_frame(const TwoForm& omega, const AcsMatrix& j,
                         const Mat4& frame, double tol = 1e-9);

// A basis (u, J u, w, J w) with both pairs unit-length in the canonical
// metric. In it the form and both diagonal structure blocks take the
// standard shape. Unique up to independent rotations in each factor.
Mat4 unitary_frame(const SplitData& sd);

// split + unitary_frame + re-split, returning data expressed in the frame.
SplitData unitary_split(const TwoForm& omega, const AcsMatrix& j,
                        const Mat42& v1_basis);

// Reads off the skew block of a SplitData expressed in a unitary frame.
// Throws when the block deviates from its forced symmetric trace-free shape.
SkewPart skew_norm(const SplitData& sd, double tol = 1e-9);

// Exact margin: smallest eigenvalue of the symmetrized omega(., J .) over the
// metric unit sphere (generalized symmetric eigenproblem).
TamenessReport tameness_margin(const TwoForm& omega, const AcsMatrix& j,
                               const Mat4& metric);

// Independent cross-check: minimum of omega(v, Jv) over a deterministic
// low-discrepancy sample of the metric unit sphere.
double tameness_margin_sampled(const TwoForm& omega, const AcsMatrix& j,
                               const Mat4& metric, int n_points = 20000);

// Verifies the operator norm of an upper-triangular block structure against
// 1 + n (n = skew norm): returns true when the sampled norm stays below it.
bool acs_norm_bound_check(const AcsMatrix& j_b, double tol = 1e-9);

// Convenience constructors for the standard block shapes.
Mat2 skew_block(double a, double b);            // [[a, b], [b, -a]]
AcsMatrix block_acs(const Mat2& b);             // [[j2, b], [0, j2]]
AcsMatrix block_acs(double a, double b);

}  // namespace tamekit::linear_core
