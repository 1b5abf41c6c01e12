#include "tamekit/jet_extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "tamekit/numerics.hpp"

namespace tamekit::jet_extension {

namespace {

void require_grid(const CircleGrid& grid) {
  if (grid.n_z < 8 || grid.n_v < 2 || !(grid.tube_radius > 0.0)) {
    throw std::invalid_argument("circle grid: need n_z >= 8, n_v >= 2, positive tube radius");
  }
}

// Unit cutoff: affine ramp 1 -> 0 over [0.15, 0.85], rounded with half-width
// 0.1. Plateau on [0, 0.05], zero from 0.95 on, slope bounded by 1/0.7 < 2.
const SmoothedShape& unit_bump() {
  static const SmoothedShape shape(PiecewiseAffine{{0.15, 0.85}, {1.0, 0.0}}, 0.1);
  return shape;
}

// Five-point central difference of a matrix curve, O(h^4).
Mat2 d5(const std::function<Mat2(double)>& f, double z, double h) {
  return (-f(z + 2.0 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2.0 * h)) / (12.0 * h);
}

// Exact operator norm of the block matrix [[0, X], [0, Y]].
double stacked_norm(const Mat2& x, const Mat2& y) {
  const Mat2 gram = x.transpose() * x + y.transpose() * y;
  return std::sqrt(spectral_norm(gram));
}

double grad23_norm(const Eigen::Matrix<double, 2, 3>& g) {
  const Mat2 gram = g * g.transpose();
  return std::sqrt(spectral_norm(gram));
}

std::vector<double> sweep_radii(double r_max, int n_v) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_v) + 1);
  out.push_back(0.0);
  for (int i = 1; i <= n_v; ++i) {
    out.push_back(r_max * static_cast<double>(i) / static_cast<double>(n_v));
  }
  return out;
}

}  // namespace

std::vector<double> CircleGrid::zs() const {
  std::vector<double> out(static_cast<std::size_t>(n_z));
  for (int i = 0; i < n_z; ++i) {
    out[static_cast<std::size_t>(i)] = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_z);
  }
  return out;
}

BumpProfile bump_profile(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump_profile: radius must be positive");
  BumpProfile out;
  out.radius = radius;
  // Evaluating through x/radius makes the family self-similar by construction.
  out.value = [radius](double x) {
    const double s = x / radius;
    if (s <= 0.05) return 1.0;
    if (s >= 0.95) return 0.0;
    return unit_bump().value(s);
  };
  out.derivative = [radius](double x) {
    const double s = x / radius;
    if (s <= 0.05 || s >= 0.95) return 0.0;
    return unit_bump().derivative(s) / radius;
  };
  const int n_samples = 200;
  out.samples.reserve(n_samples + 1);
  for (int i = 0; i <= n_samples; ++i) {
    const double x = radius * static_cast<double>(i) / static_cast<double>(n_samples);
    out.samples.push_back({x, out.value(x), out.derivative(x)});
  }
  return out;
}

SectionField extend_section(const JetData& jet, double radius, const CircleGrid& grid,
                            bool blend_charts) {
  require_grid(grid);
  if (!jet.normal_part) throw std::invalid_argument("extend_section: normal part is required");
  if (!(radius > 0.0) || radius > grid.tube_radius * (1.0 + 1e-12)) {
    throw std::invalid_argument("extend_section: radius must lie in (0, tube_radius]");
  }

  const auto f_normal = jet.normal_part;
  const bool has_td = static_cast<bool>(jet.tangent_derivative);
  const bool has_h = static_cast<bool>(jet.normal_hessian);
  const auto hess = jet.normal_hessian;

  const std::function<Mat2(double)> f_prime =
      has_td ? jet.tangent_derivative
             : std::function<Mat2(double)>([f_normal](double z) { return d5(f_normal, z, 1e-3); });
  const std::function<std::array<Mat2, 2>(double)> hess_prime =
      [hess, has_h](double z) -> std::array<Mat2, 2> {
    if (!has_h) return {Mat2::Zero(), Mat2::Zero()};
    auto c0 = [hess](double w) { return hess(w)[0]; };
    auto c1 = [hess](double w) { return hess(w)[1]; };
    return {d5(c0, z, 1e-3), d5(c1, z, 1e-3)};
  };

  const auto zs = grid.zs();

  double k = 0.0;
  for (double z : zs) k = std::max(k, spectral_norm(f_normal(z)));

  // Consistency of the supplied 2-jet: quadratic blocks symmetric, the
  // tangential derivative equal to the actual derivative of the normal part.
  for (double z : zs) {
    if (has_h) {
      const auto hh = hess(z);
      for (const Mat2& block : hh) {
        const double asym = spectral_norm(Mat2(block - block.transpose()));
        if (asym > 1e-9 * std::max(1.0, spectral_norm(block))) {
          throw std::invalid_argument("extend_section: quadratic jet block is not symmetric");
        }
      }
    }
    if (has_td) {
      const double mismatch = spectral_norm(Mat2(jet.tangent_derivative(z) - d5(f_normal, z, 1e-3)));
      if (mismatch > 1e-9 * std::max(1.0, k)) {
        throw std::invalid_argument(
            "extend_section: tangential derivative disagrees with the normal part");
      }
    }
  }

  double c = 0.0;
  for (double z : zs) {
    c = std::max(c, spectral_norm(f_prime(z)));
    if (has_h) {
      const auto hh = hess(z);
      const auto hp = hess_prime(z);
      for (int i = 0; i < 2; ++i) {
        c = std::max(c, spectral_norm(hh[static_cast<std::size_t>(i)]));
        c = std::max(c, spectral_norm(hp[static_cast<std::size_t>(i)]));
      }
    }
  }

  SectionField out;
  if (k <= 1e-300) {
    out.bounds = {0.0, c, radius};
    out.bump = bump_profile(radius);
    out.value = [](double, const Vec2&) { return Vec2::Zero().eval(); };
    out.gradient = [](double, const Vec2&) { return Eigen::Matrix<double, 2, 3>::Zero().eval(); };
    return out;
  }

  // The gradient bound needs c * r below k on the support.
  double r_eff = radius;
  if (c * radius >= k) r_eff = 0.99 * k / c;
  out.bounds = {k, c, r_eff};
  out.bump = bump_profile(r_eff);
  const auto bump = out.bump;

  auto raw = [f_normal, hess, has_h](double z, const Vec2& v) -> Vec2 {
    Vec2 val = f_normal(z) * v;
    if (has_h) {
      const auto hh = hess(z);
      val[0] += 0.5 * v.dot(hh[0] * v);
      val[1] += 0.5 * v.dot(hh[1] * v);
    }
    return val;
  };

  auto plain_value = [raw, bump, r_eff](double z, const Vec2& v) -> Vec2 {
    const double r = v.norm();
    if (r >= r_eff) return Vec2::Zero();
    return bump.value(r) * raw(z, v);
  };

  auto plain_gradient = [raw, f_normal, f_prime, hess, hess_prime, has_h, bump,
                         r_eff](double z, const Vec2& v) -> Eigen::Matrix<double, 2, 3> {
    Eigen::Matrix<double, 2, 3> g = Eigen::Matrix<double, 2, 3>::Zero();
    const double r = v.norm();
    if (r >= r_eff) return g;
    const double rho = bump.value(r);
    Vec2 dz = f_prime(z) * v;
    Mat2 dv = f_normal(z);
    if (has_h) {
      const auto hp = hess_prime(z);
      dz[0] += 0.5 * v.dot(hp[0] * v);
      dz[1] += 0.5 * v.dot(hp[1] * v);
      const auto hh = hess(z);
      dv.row(0) += (hh[0] * v).transpose();
      dv.row(1) += (hh[1] * v).transpose();
    }
    g.col(0) = rho * dz;
    g.block<2, 2>(0, 1) = rho * dv;
    if (r > 0.0) {
      const double drho = bump.derivative(r);
      if (drho != 0.0) g.block<2, 2>(0, 1) += (drho / r) * raw(z, v) * v.transpose();
    }
    return g;
  };

  if (!blend_charts) {
    out.value = plain_value;
    out.gradient = plain_gradient;
  } else {
    // Two charts covering the circle, glued by a smooth partition of unity.
    // Chart B works in the shifted coordinate w = z - pi; both charts build
    // the same local extension, so the glued field must agree with the
    // one-chart field up to rounding in the shift.
    auto weight_a = std::make_shared<SmoothedShape>(
        PiecewiseAffine{{-0.25, 0.25, kPi - 0.25, kPi + 0.25}, {0.0, 1.0, 1.0, 0.0}}, 0.2);
    auto chi_a = [weight_a](double z) {
      double t = std::fmod(z, 2.0 * kPi);
      if (t < 0.0) t += 2.0 * kPi;
      if (t >= 1.5 * kPi) t -= 2.0 * kPi;  // fold into [-pi/2, 3*pi/2)
      return weight_a->value(t);
    };
    out.value = [plain_value, chi_a](double z, const Vec2& v) -> Vec2 {
      const double wa = chi_a(z);
      const double w = z - kPi;
      return wa * plain_value(z, v) + (1.0 - wa) * plain_value(w + kPi, v);
    };
    out.gradient = [plain_gradient, chi_a](double z, const Vec2& v) -> Eigen::Matrix<double, 2, 3> {
      const double wa = chi_a(z);
      const double w = z - kPi;
      return wa * plain_gradient(z, v) + (1.0 - wa) * plain_gradient(w + kPi, v);
    };
  }

  // Verification sweep: value growth and gradient size on the support.
  const auto radii = sweep_radii(r_eff, grid.n_v);
  for (double z : zs) {
    for (double r : radii) {
      for (int a = 0; a < 8; ++a) {
        const double th = 2.0 * kPi * static_cast<double>(a) / 8.0;
        const Vec2 v(r * std::cos(th), r * std::sin(th));
        if (out.value(z, v).norm() > 2.0 * k * r + 1e-9) {
          throw std::logic_error("extend_section: value bound failed on the sweep");
        }
        if (grad23_norm(out.gradient(z, v)) > 6.0 * k + 1e-9) {
          throw std::logic_error("extend_section: gradient bound failed on the sweep");
        }
      }
    }
  }
  return out;
}

DiffeoExtension extend_diffeo(const DiffeoJet& jet, double radius, const CircleGrid& grid) {
  require_grid(grid);
  if (!jet.tangential_shift || !jet.normal_block) {
    throw std::invalid_argument("extend_diffeo: shift and normal block are required");
  }
  if (!(radius > 0.0) || radius > grid.tube_radius * (1.0 + 1e-12)) {
    throw std::invalid_argument("extend_diffeo: radius must lie in (0, tube_radius]");
  }

  const auto shift = jet.tangential_shift;
  const auto block = jet.normal_block;
  const std::function<Mat2(double)> shift_dz =
      jet.tangential_shift_dz
          ? jet.tangential_shift_dz
          : std::function<Mat2(double)>([shift](double z) { return d5(shift, z, 1e-3); });
  const std::function<Mat2(double)> block_dz =
      jet.normal_block_dz
          ? jet.normal_block_dz
          : std::function<Mat2(double)>([block](double z) { return d5(block, z, 1e-3); });

  DiffeoExtension out;
  out.support_radius = radius;
  const auto bump = bump_profile(radius);

  const auto zs = grid.zs();
  for (double z : zs) {
    out.input_defect =
        std::max(out.input_defect, stacked_norm(shift(z), Mat2(block(z) - Mat2::Identity())));
  }

  out.map = [shift, block, bump, radius](const Vec4& p) -> Vec4 {
    const Vec2 v = p.tail<2>();
    const double r = v.norm();
    if (r >= radius) return p;
    const double rho = bump.value(r);
    Vec4 q;
    q.head<2>() = p.head<2>() + rho * (shift(p[0]) * v);
    q.tail<2>() = v + rho * ((block(p[0]) - Mat2::Identity()) * v);
    return q;
  };

  out.jacobian = [shift, block, shift_dz, block_dz, bump, radius](const Vec4& p) -> Mat4 {
    Mat4 j = Mat4::Identity();
    const Vec2 v = p.tail<2>();
    const double r = v.norm();
    if (r >= radius) return j;
    const double rho = bump.value(r);
    const Mat2 s = shift(p[0]);
    const Mat2 y = block(p[0]) - Mat2::Identity();
    j.block<2, 1>(0, 0) += rho * (shift_dz(p[0]) * v);
    j.block<2, 1>(2, 0) += rho * (block_dz(p[0]) * v);
    j.block<2, 2>(0, 2) = rho * s;
    j.block<2, 2>(2, 2) += rho * y;
    if (r > 0.0) {
      const double drho = bump.derivative(r);
      if (drho != 0.0) {
        const Eigen::RowVector2d du = v.transpose() / r;
        j.block<2, 2>(0, 2) += drho * (s * v) * du;
        j.block<2, 2>(2, 2) += drho * (y * v) * du;
      }
    }
    return j;
  };

  const auto map = out.map;
  const auto jac = out.jacobian;
  out.inverse = [map, jac](const Vec4& q) -> Vec4 {
    Vec4 p = q;
    for (int it = 0; it < 12; ++it) {
      const Vec4 res = map(p) - q;
      if (res.norm() < 1e-14) break;
      p -= jac(p).partialPivLu().solve(res);
    }
    return p;
  };

  // Sweep the tube for invertibility and the measured displacement sizes.
  const int z_stride = std::max(1, grid.n_z / 96);
  const auto radii = sweep_radii(radius * (1.0 - 1e-12), grid.n_v);
  out.jacobian_min = std::numeric_limits<double>::infinity();
  for (std::size_t iz = 0; iz < zs.size(); iz += static_cast<std::size_t>(z_stride)) {
    const double z = zs[iz];
    for (double r : radii) {
      const int n_angles = r == 0.0 ? 1 : 12;
      for (int a = 0; a < n_angles; ++a) {
        const double th = 2.0 * kPi * static_cast<double>(a) / 12.0;
        Vec4 p(z, 0.3, r * std::cos(th), r * std::sin(th));
        const Mat4 j = jac(p);
        out.jacobian_min = std::min(out.jacobian_min, j.determinant());
        out.c1_defect = std::max(out.c1_defect, operator_norm(Mat4(j - Mat4::Identity())));
        out.c0_displacement = std::max(out.c0_displacement, (map(p) - p).norm());
      }
    }
  }
  out.c1_defect = std::max(out.c1_defect, out.input_defect);
  out.invertible = out.jacobian_min > 0.0;
  return out;
}

namespace {

// Trigonometric polynomial with two harmonics per matrix entry.
struct TrigMat {
  // per entry: constant, cos z, sin z, cos 2z, sin 2z
  std::array<std::array<double, 5>, 4> coeff{};

  Mat2 at(double z) const {
    Mat2 m;
    const double c1 = std::cos(z), s1 = std::sin(z);
    const double c2 = std::cos(2.0 * z), s2 = std::sin(2.0 * z);
    for (int i = 0; i < 4; ++i) {
      const auto& a = coeff[static_cast<std::size_t>(i)];
      m(i / 2, i % 2) = a[0] + a[1] * c1 + a[2] * s1 + a[3] * c2 + a[4] * s2;
    }
    return m;
  }
  Mat2 dz(double z) const {
    Mat2 m;
    const double c1 = std::cos(z), s1 = std::sin(z);
    const double c2 = std::cos(2.0 * z), s2 = std::sin(2.0 * z);
    for (int i = 0; i < 4; ++i) {
      const auto& a = coeff[static_cast<std::size_t>(i)];
      m(i / 2, i % 2) = -a[1] * s1 + a[2] * c1 - 2.0 * a[3] * s2 + 2.0 * a[4] * c2;
    }
    return m;
  }

  static TrigMat random(Rng& rng) {
    TrigMat out;
    for (auto& entry : out.coeff) {
      for (int h = 0; h < 5; ++h) {
        const double damp = h == 0 ? 1.0 : (h <= 2 ? 0.5 : 0.25);
        entry[static_cast<std::size_t>(h)] = damp * rng.uniform(-1.0, 1.0);
      }
    }
    return out;
  }
};

}  // namespace

Calibration calibrate_constants(const CircleGrid& grid, unsigned seed) {
  require_grid(grid);
  Rng rng(static_cast<std::uint64_t>(seed));
  Calibration out;
  double kappa_raw = 1.0;
  const auto zs = grid.zs();

  for (int step = 1; step <= 12; ++step) {
    const double level = 0.05 * static_cast<double>(step);
    bool all_ok = true;
    for (int trial = 0; trial < 6; ++trial) {
      const TrigMat s_raw = TrigMat::random(rng);
      const TrigMat y_raw = TrigMat::random(rng);
      double base = 0.0;
      for (double z : zs) base = std::max(base, stacked_norm(s_raw.at(z), y_raw.at(z)));
      if (base <= 0.0) continue;
      const double scale = level / base;  // the block norm is homogeneous in the pair

      DiffeoJet jet;
      jet.tangential_shift = [s_raw, scale](double z) { return Mat2(scale * s_raw.at(z)); };
      jet.normal_block = [y_raw, scale](double z) {
        return Mat2(Mat2::Identity() + scale * y_raw.at(z));
      };
      jet.tangential_shift_dz = [s_raw, scale](double z) { return Mat2(scale * s_raw.dz(z)); };
      jet.normal_block_dz = [y_raw, scale](double z) { return Mat2(scale * y_raw.dz(z)); };

      const auto ext = extend_diffeo(jet, grid.tube_radius, grid);
      if (!ext.invertible) {
        all_ok = false;
        break;
      }
      if (ext.input_defect > 0.0) {
        kappa_raw = std::max(kappa_raw, ext.c1_defect / ext.input_defect);
      }
    }
    if (!all_ok) break;
    out.epsilon_0 = level;
  }
  out.kappa = std::clamp(kappa_raw, 1.0, 6.0);
  return out;
}

}  // namespace tamekit::jet_extension
