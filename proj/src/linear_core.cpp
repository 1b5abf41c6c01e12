#include "tamekit/linear_core.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tamekit::linear_core {

namespace {

double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

// Symmetric positive square root inverse, for unit-sphere changes of metric.
Mat4 inv_sqrt_spd(const Mat4& g) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(g);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("metric must be positive definite");
  return es.operatorInverseSqrt();
}

}  // namespace

const AcsMatrix& validate_acs(const AcsMatrix& j, double tol) {
  const Mat4 defect = j * j + Mat4::Identity();
  if (max_abs(defect) > tol) {
    std::ostringstream msg;
    msg << "validate_acs: J*J differs from -Id by " << max_abs(defect);
    throw std::invalid_argument(msg.str());
  }
  return j;
}

const TwoForm& validate_two_form(const TwoForm& omega, double tol) {
  if (max_abs(omega + omega.transpose()) > tol)
    throw std::invalid_argument("validate_two_form: matrix is not antisymmetric");
  return omega;
}

bool is_invariant(const TwoForm& omega, const AcsMatrix& j, double tol) {
  return max_abs(j.transpose() * omega * j - omega) <= tol;
}

bool is_tame(const TwoForm& omega, const AcsMatrix& j) {
  return tameness_margin(omega, j, Mat4::Identity()).margin > 0.0;
}

TwoForm iota(const TwoForm& omega, const AcsMatrix& j) {
  validate_two_form(omega);
  validate_acs(j);
  if (!is_tame(omega, j))
    throw std::domain_error("iota: form does not tame the structure");
  return j.transpose() * omega * j;
}

TwoForm compat_projection(const TwoForm& omega, const AcsMatrix& j) {
  return 0.5 * (omega + iota(omega, j));
}

SplitData split(const TwoForm& omega, const AcsMatrix& j, const Mat42& v1_basis,
                double tol) {
  validate_two_form(omega);
  validate_acs(j);
  if (v1_basis.colPivHouseholderQr().rank() < 2)
    throw std::invalid_argument("split: plane basis is degenerate");

  // Invariance: J applied to the basis must stay in the span.
  const Eigen::ColPivHouseholderQR<Mat42> qr(v1_basis);
  for (int c = 0; c < 2; ++c) {
    const Vec4 jv = j * v1_basis.col(c);
    const Vec4 resid = jv - v1_basis * qr.solve(jv);
    if (resid.norm() > tol * std::max(1.0, jv.norm()))
      throw std::invalid_argument("split: plane is not invariant under the structure");
  }

  // Complement = kernel of v -> omega(basis, v).
  Eigen::Matrix<double, 2, 4> rows;
  rows.row(0) = (omega.transpose() * v1_basis.col(0)).transpose();
  rows.row(1) = (omega.transpose() * v1_basis.col(1)).transpose();
  const Eigen::FullPivLU<Eigen::Matrix<double, 2, 4>> lu(rows);
  if (lu.dimensionOfKernel() != 2)
    throw std::invalid_argument("split: form degenerates on the plane");
  const Eigen::Matrix<double, 4, Eigen::Dynamic> ker = lu.kernel();

  Mat4 frame;
  frame.leftCols<2>() = v1_basis;
  frame.rightCols<2>() = ker.leftCols<2>();
  return split_in_frame(omega, j, frame, tol);
}

SplitData split_in_frame(const TwoForm& omega, const AcsMatrix& j,
                         const Mat4& frame, double tol) {
  if (std::abs(frame.determinant()) < 1e-12)
    throw std::invalid_argument("split_in_frame: frame is degenerate");
  const Mat42 v1 = frame.leftCols<2>();
  const Mat42 v2 = frame.rightCols<2>();

  // The two subspaces must be orthogonal for the form.
  const Mat2 cross = v1.transpose() * omega * v2;
  if (cross.cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("split_in_frame: subspaces are not form-orthogonal");

  const Mat4 j_split = frame.inverse() * j * frame;
  if (j_split.block<2, 2>(2, 0).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("split_in_frame: plane is not invariant under the structure");

  SplitData sd;
  sd.v1_basis = v1;
  sd.v2_basis = v2;
  sd.j1 = j_split.block<2, 2>(0, 0);
  sd.j2 = j_split.block<2, 2>(2, 2);
  sd.b = j_split.block<2, 2>(0, 2);

  // Canonical metric: g_k = omega_k(., J_k .) on each factor, assembled in
  // ambient coordinates. Independent of the skew block by construction.
  const Mat2 omega1 = v1.transpose() * omega * v1;
  const Mat2 omega2 = v2.transpose() * omega * v2;
  Mat4 g_split = Mat4::Zero();
  g_split.block<2, 2>(0, 0) = sym(omega1 * sd.j1);
  g_split.block<2, 2>(2, 2) = sym(omega2 * sd.j2);
  const Mat4 frame_inv = frame.inverse();
  sd.g = frame_inv.transpose() * g_split * frame_inv;
  sd.g = sym(sd.g);

  Eigen::SelfAdjointEigenSolver<Mat4> es(sd.g);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("split_in_frame: canonical metric is not positive (pair not tame on a factor)");
  return sd;
}

Mat4 unitary_frame(const SplitData& sd) {
  Mat4 frame;
  // For each factor: normalize the first basis vector in the canonical
  // metric and complete with its image under the structure.
  const Mat2 g1 = sd.v1_basis.transpose() * sd.g * sd.v1_basis;
  const Mat2 g2 = sd.v2_basis.transpose() * sd.g * sd.v2_basis;

  const Vec2 e = Vec2::UnitX();
  const Vec2 c1 = e / std::sqrt(e.dot(g1 * e));
  const Vec2 c2 = e / std::sqrt(e.dot(g2 * e));

  frame.col(0) = sd.v1_basis * c1;
  frame.col(1) = sd.v1_basis * (sd.j1 * c1);
  frame.col(2) = sd.v2_basis * c2;
  frame.col(3) = sd.v2_basis * (sd.j2 * c2);
  return frame;
}

SplitData unitary_split(const TwoForm& omega, const AcsMatrix& j,
                        const Mat42& v1_basis) {
  const SplitData sd = split(omega, j, v1_basis);
  return split_in_frame(omega, j, unitary_frame(sd));
}

SkewPart skew_norm(const SplitData& sd, double tol) {
  const Mat2 j2 = standard_j2();
  if ((sd.j1 - j2).cwiseAbs().maxCoeff() > tol ||
      (sd.j2 - j2).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("skew_norm: split data is not in a unitary frame");

  SkewPart sp;
  sp.a = 0.5 * (sd.b(0, 0) - sd.b(1, 1));
  sp.b = 0.5 * (sd.b(0, 1) + sd.b(1, 0));
  const Mat2 shaped = skew_block(sp.a, sp.b);
  if ((sd.b - shaped).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("skew_norm: block deviates from the symmetric trace-free shape");
  sp.n = std::hypot(sp.a, sp.b);
  return sp;
}

TamenessReport tameness_margin(const TwoForm& omega, const AcsMatrix& j,
                               const Mat4& metric) {
  const Mat4 s = sym(omega * j);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat4> es(s, metric);
  TamenessReport rep;
  rep.margin = es.eigenvalues().minCoeff();
  int idx = 0;
  es.eigenvalues().minCoeff(&idx);
  rep.argmin_point = 0;
  rep.argmin_vector = es.eigenvectors().col(idx);
  rep.per_point = {{0, rep.margin}};
  return rep;
}

double tameness_margin_sampled(const TwoForm& omega, const AcsMatrix& j,
                               const Mat4& metric, int n_points) {
  const Mat4 to_unit = inv_sqrt_spd(metric);  // euclidean sphere -> metric sphere
  const Mat4 q = to_unit.transpose() * sym(omega * j) * to_unit;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& v : lattice_sphere3(n_points)) lo = std::min(lo, v.dot(q * v));
  return lo;
}

bool acs_norm_bound_check(const AcsMatrix& j_b, double tol) {
  const Mat2 j2 = standard_j2();
  if ((j_b.block<2, 2>(0, 0) - j2).cwiseAbs().maxCoeff() > tol ||
      (j_b.block<2, 2>(2, 2) - j2).cwiseAbs().maxCoeff() > tol ||
      j_b.block<2, 2>(2, 0).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("acs_norm_bound_check: not in block shape");
  const double n = spectral_norm(Mat2(j_b.block<2, 2>(0, 2)));
  return operator_norm(j_b) <= 1.0 + n + tol;
}

Mat2 skew_block(double a, double b) {
  Mat2 m;
  m << a, b, b, -a;
  return m;
}

AcsMatrix block_acs(const Mat2& b) {
  Mat4 j = Mat4::Zero();
  j.block<2, 2>(0, 0) = standard_j2();
  j.block<2, 2>(2, 2) = standard_j2();
  j.block<2, 2>(0, 2) = b;
  return j;
}

AcsMatrix block_acs(double a, double b) { return block_acs(skew_block(a, b)); }

}  // namespace tamekit::linear_core
