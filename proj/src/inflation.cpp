#include "tamekit/inflation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tamekit::inflation {

namespace {

constexpr double kEpsFloor = 1e-6;
constexpr double kCeilingMargin = 0.05;  // fraction kept strictly below the pointwise ceiling

void require_eps(const EpsilonPair& eps) {
  if (!(eps.eps1 > 0.0 && eps.eps1 < 1.0))
    throw std::invalid_argument("first bound must lie in (0, 1)");
  if (!(eps.eps2 > 0.0)) throw std::invalid_argument("second bound must be positive");
  if (!(eps.valid_radius > 0.0)) throw std::invalid_argument("valid radius must be positive");
}

void fill_samples(RadialProfile& p, int n = 400) {
  p.samples.clear();
  p.samples.reserve(n + 1);
  p.samples.push_back({0.0, p.f(0.0), 0.0});
  const double lo = std::log(p.support_radius * 1e-6);
  const double hi = std::log(p.support_radius);
  for (int i = 0; i < n; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / (n - 1.0));
    p.samples.push_back({r, p.f(r), p.f_prime(r)});
  }
}

// 2 pi * integral of (f - 1) r dr over [0, support]; the plateau part below
// plateau_r is summed in closed form so arbitrarily tall heads stay exact
double disk_excess_integral(const std::function<double(double)>& f, double head,
                            double plateau_r, double support_r, int nodes) {
  const double rho_lo = std::log(std::max(plateau_r, support_r * 1e-18));
  const double rho_hi = std::log(support_r);
  double acc = (head - 1.0) * 0.5 * std::exp(2.0 * rho_lo);
  if (rho_hi > rho_lo) {
    if (nodes % 2) ++nodes;
    acc += simpson(
        [&](double rho) {
          const double r = std::exp(rho);
          return (f(r) - 1.0) * r * r;
        },
        rho_lo, rho_hi, nodes);
  }
  return 2.0 * kPi * acc;
}

// shared band shape for the bundle cases: plateau at head, logarithmic
// descent over [rho1, rho2] with rate below the sufficient-condition budget
RadialProfile band_profile(double head, const EpsilonPair& eps, double radius_cap) {
  require_eps(eps);
  const double support = std::min(radius_cap, 0.5 * (1.0 - eps.eps1) / eps.eps2);
  const double reach = (1.0 - kCeilingMargin) * (1.0 - eps.eps1) / eps.eps2;
  const double budget = reach * reach - support * support;
  if (!(budget > 0.0)) throw std::logic_error("support left no room for the descent budget");
  const double rho2 = std::log(0.5 * support);
  const double band = std::max(1.1 * head / budget, 0.2);
  const double rho1 = rho2 - band;
  const double w = std::min(band, std::log(2.0)) / 10.0;
  auto shape = std::make_shared<SmoothedShape>(PiecewiseAffine{{rho1, rho2}, {head, 0.0}}, w);

  RadialProfile p;
  p.support_radius = support;
  p.plateau_radius = std::exp(rho1 - w);
  p.head = head;
  p.tail = 0.0;
  p.slope_budget = head / band;
  p.non_increasing = true;
  const double vanish = rho2 + w;
  p.f = [shape, head, pr = p.plateau_radius, vanish](double r) {
    if (r <= pr) return head;
    const double rho = std::log(r);
    return rho >= vanish ? 0.0 : shape->value(rho);
  };
  p.f_prime = [shape, pr = p.plateau_radius, vanish](double r) {
    if (r <= pr) return 0.0;
    const double rho = std::log(r);
    return rho >= vanish ? 0.0 : shape->derivative(rho) / r;
  };
  fill_samples(p);
  return p;
}

}  // namespace

Mat4 NormalModel::acs(double z, double r) const {
  Mat4 j;
  j.block<2, 2>(0, 0) = a_block(z, r);
  j.block<2, 2>(0, 2) = b_block(z, r);
  j.block<2, 2>(2, 0) = c_block(z, r);
  j.block<2, 2>(2, 2) = d_block(z, r);
  return j;
}

Mat4 NormalModel::metric(double z, double r) const {
  const Mat2 j0t = standard_j2().transpose();
  Mat4 g = Mat4::Zero();
  g.block<2, 2>(0, 0) = sym(j0t * a_block(z, r));
  g.block<2, 2>(2, 2) = sym(j0t * d_block(z, r));
  return g;
}

std::vector<double> NormalModel::radial_grid() const {
  std::vector<double> rs(n_r + 1);
  rs[0] = 0.0;
  const double lo = std::log(r_max * 1e-4);
  const double hi = std::log(r_max);
  for (int i = 0; i < n_r; ++i) rs[i + 1] = std::exp(lo + (hi - lo) * i / (n_r - 1.0));
  rs.back() = r_max;
  return rs;
}

std::vector<double> NormalModel::z_grid() const {
  std::vector<double> zs(n_z);
  for (int i = 0; i < n_z; ++i) zs[i] = 2.0 * kPi * i / n_z;
  return zs;
}

void validate_model(const NormalModel& model, double tol) {
  if (!(model.r_max > 0.0)) throw std::invalid_argument("model radius must be positive");
  if (model.n_r < 8 || model.n_z < 4 || model.n_theta < 4)
    throw std::invalid_argument("grid resolutions too coarse");
  if (!model.a_block || !model.b_block || !model.c_block || !model.d_block)
    throw std::invalid_argument("all four blocks must be set");
  const Mat2 j0 = standard_j2();
  const Mat4 omega0 = standard_omega();
  for (double z : model.z_grid()) {
    if ((model.a_block(z, 0.0) - j0).cwiseAbs().maxCoeff() > tol ||
        (model.d_block(z, 0.0) - j0).cwiseAbs().maxCoeff() > tol ||
        model.c_block(z, 0.0).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("blocks must reduce to the standard split along the zero section");
    if (!linear_core::is_tame(omega0, model.acs(z, 0.0)))
      throw std::domain_error("structure is not tame along the zero section");
  }
  for (double z : model.z_grid())
    for (double r : model.radial_grid()) {
      const Mat4 j = model.acs(z, r);
      if ((j * j + Mat4::Identity()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("blocks do not square to minus identity");
    }
}

NormalModel compatible_model(int self_intersection, double r_max) {
  NormalModel m;
  m.self_intersection = self_intersection;
  m.r_max = r_max;
  const Mat2 j0 = standard_j2();
  m.a_block = [j0](double, double) { return j0; };
  m.d_block = m.a_block;
  m.b_block = [](double, double) { return Mat2(Mat2::Zero()); };
  m.c_block = m.b_block;
  return m;
}

NormalModel constant_skew_model(double a, double b, int self_intersection, double r_max) {
  NormalModel m = compatible_model(self_intersection, r_max);
  const Mat2 skew = linear_core::skew_block(a, b);
  m.b_block = [skew](double, double) { return skew; };
  return m;
}

NormalModel fiber_twist_model(double c_norm, double r_max) {
  NormalModel m = compatible_model(0, r_max);
  Mat2 c1;
  c1 << c_norm, 0.0, 0.0, -c_norm;  // anti-commutes with J0, so J squares to -Id
  m.c_block = [c1](double, double r) { return Mat2(r * c1); };
  return m;
}

NormalModel sheared_model(double a, double b, double shear, int self_intersection, double r_max) {
  NormalModel m = compatible_model(self_intersection, r_max);
  const Mat2 j0 = standard_j2();
  Mat2 s1;
  s1 << 1.0, 0.5, -0.3, 0.8;
  s1 *= shear;
  auto skew_at = [a, b](double z) {
    return linear_core::skew_block(a * std::cos(z) - b * std::sin(z), a * std::sin(z) + b * std::cos(z));
  };
  m.a_block = [j0, s1, skew_at](double z, double r) { return Mat2(j0 - skew_at(z) * (r * s1)); };
  m.b_block = [skew_at](double z, double) { return skew_at(z); };
  m.c_block = [j0, s1, skew_at](double z, double r) {
    const Mat2 s = r * s1;
    return Mat2(s * j0 - j0 * s - s * skew_at(z) * s);
  };
  m.d_block = [j0, s1, skew_at](double z, double r) { return Mat2(r * s1 * skew_at(z) + j0); };
  return m;
}

EpsilonPair estimate_epsilons(const NormalModel& model) {
  validate_model(model);
  const auto radii = model.radial_grid();
  const auto zs = model.z_grid();
  const Mat2 j0t = standard_j2().transpose();
  const Mat4 omega0 = standard_omega();

  double e1 = 0.0, e2 = 0.0, valid = -1.0;
  for (double r : radii) {
    double shell_e1 = 0.0, shell_e2 = 0.0;
    bool shell_ok = true;
    for (double z : zs) {
      const Mat2 ga = sym(j0t * model.a_block(z, r));
      const Mat2 gd = sym(j0t * model.d_block(z, r));
      Eigen::SelfAdjointEigenSolver<Mat2> ea(ga), ed(gd);
      if (ea.eigenvalues().minCoeff() <= 0.0 || ed.eigenvalues().minCoeff() <= 0.0 ||
          !linear_core::is_tame(omega0, model.acs(z, r))) {
        shell_ok = false;
        break;
      }
      const Mat2 ga_is = ea.operatorInverseSqrt();
      const Mat2 gd_is = ed.operatorInverseSqrt();
      shell_e1 = std::max(shell_e1, 0.5 * spectral_norm(ga_is * (j0t * model.b_block(z, r)) * gd_is));
      if (r > 0.0)
        shell_e2 = std::max(shell_e2, 0.5 * spectral_norm(gd_is * (j0t * model.c_block(z, r)) * ga_is) / r);
    }
    if (!shell_ok || std::max(e1, shell_e1) >= 1.0) break;
    e1 = std::max(e1, shell_e1);
    e2 = std::max(e2, shell_e2);
    valid = r;
  }
  if (valid <= 0.0)
    throw std::domain_error("no grid neighborhood of the zero section satisfies the bound below 1");
  return {std::max(e1, kEpsFloor), std::max(e2, kEpsFloor), valid};
}

RadialProfile build_profile_trivial(double t_target, const EpsilonPair& eps) {
  if (!(t_target >= 0.0)) throw std::invalid_argument("area shift target must be nonnegative");
  require_eps(eps);
  const double support = std::min(eps.valid_radius, 0.95 * (1.0 - eps.eps1) / eps.eps2);

  RadialProfile p;
  p.support_radius = support;
  p.tail = 1.0;
  p.non_increasing = true;

  if (t_target == 0.0) {
    p.head = 1.0;
    p.plateau_radius = support;
    p.f = [](double) { return 1.0; };
    p.f_prime = [](double) { return 0.0; };
    fill_samples(p);
    return p;
  }

  const double c_hat = std::log(1.0 - kCeilingMargin) + 2.0 * std::log((1.0 - eps.eps1) / eps.eps2);
  const double rho_r = std::log(support);
  const double rho_zero = 0.5 * c_hat;  // the ceiling line reaches height 0 here
  const double w = std::min(0.02, 0.5 * (rho_zero - rho_r));
  if (!(w > 0.0)) throw std::logic_error("support does not sit strictly below the ceiling");
  const double rho_end = rho_r - 3.0 * w;

  struct Built {
    std::shared_ptr<SmoothedShape> g;
    double plateau_rho;
  };
  // max(0, min(k_hat, ceiling, steep)) is affine between the pairwise
  // crossings, so sampling it at those points reproduces it exactly and the
  // smoothing of the result stays below each of the three lines
  auto build = [&](double k_hat) {
    auto expr = [&](double rho) {
      const double ceiling = c_hat - 2.0 * rho;
      const double steep = 4.0 * (rho_end - rho);
      return std::max(0.0, std::min({k_hat, ceiling, steep}));
    };
    std::vector<double> ks = {0.5 * (c_hat - k_hat), rho_end - 0.25 * k_hat,
                              2.0 * rho_end - rho_zero, rho_zero, rho_end};
    std::sort(ks.begin(), ks.end());
    std::vector<double> xs = {ks.front() - 1.0};
    for (double k : ks)
      if (k > xs.back() + 1e-12) xs.push_back(k);
    xs.push_back(xs.back() + 1.0);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = expr(xs[i]);
    Built bb;
    bb.g = std::make_shared<SmoothedShape>(PiecewiseAffine{xs, ys}, w);
    bb.plateau_rho = std::min(0.5 * (c_hat - k_hat), rho_end - 0.25 * k_hat) - w;
    return bb;
  };
  auto f_of = [&](const Built& bb, double k_hat) {
    const double pr = std::exp(bb.plateau_rho);
    const double one_from = rho_end + w;
    return [g = bb.g, k_hat, pr, one_from](double r) {
      if (r <= pr) return std::exp(k_hat);
      const double rho = std::log(r);
      return rho >= one_from ? 1.0 : std::exp(g->value(rho));
    };
  };
  auto shift_of = [&](double k_hat) {
    const Built bb = build(k_hat);
    return disk_excess_integral(f_of(bb, k_hat), std::exp(k_hat), std::exp(bb.plateau_rho), support, 2400);
  };

  double lo = 0.0, hi = 1.0;
  while (shift_of(hi) < t_target) {
    hi *= 2.0;
    if (hi > 600.0) throw std::runtime_error("area shift target exceeds the representable plateau height");
  }
  double k_hat = hi;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = shift_of(mid);
    if (std::abs(s - t_target) < 0.002 * t_target) {
      k_hat = mid;
      break;
    }
    (s < t_target ? lo : hi) = mid;
    k_hat = 0.5 * (lo + hi);
  }

  const Built bb = build(k_hat);
  p.head = std::exp(k_hat);
  p.plateau_radius = std::exp(bb.plateau_rho);
  p.f = f_of(bb, k_hat);
  const double one_from = rho_end + w;
  p.f_prime = [g = bb.g, pr = p.plateau_radius, one_from](double r) {
    if (r <= pr) return 0.0;
    const double rho = std::log(r);
    if (rho >= one_from) return 0.0;
    return std::exp(g->value(rho)) * g->derivative(rho) / r;
  };
  fill_samples(p);
  return p;
}

RadialProfile build_profile_negative(int m, double m_prime, const EpsilonPair& eps) {
  if (m < 1) throw std::invalid_argument("multiplicity must be a positive integer");
  if (!(m_prime > 0.0 && m_prime < 1.0 / m))
    throw std::invalid_argument("head value must lie in (0, 1/m): it may not exceed the available area of the zero section");
  return band_profile(m_prime, eps, eps.valid_radius);
}

RadialProfile build_profile_positive_demo(int m, double m_prime, const EpsilonPair& eps) {
  if (m < 1) throw std::invalid_argument("multiplicity must be a positive integer");
  if (!(m_prime > 0.0)) throw std::invalid_argument("head value must be positive");
  const double r_cap = 0.95 / std::sqrt(static_cast<double>(m));
  return band_profile(m_prime, eps, std::min(eps.valid_radius, r_cap));
}

double positive_case_bound(int m, double eps1) {
  if (m < 1) throw std::invalid_argument("multiplicity must be a positive integer");
  if (!(eps1 > 0.0 && eps1 < 1.0)) throw std::invalid_argument("bound parameter must lie in (0, 1)");
  return (1.0 - eps1 * eps1) / (eps1 * eps1) / m;
}

FormField omega_f(const NormalModel& model, const RadialProfile& profile) {
  const int si = model.self_intersection;
  if (si == 0 && profile.tail != 1.0)
    throw std::invalid_argument("product-case field needs a profile with tail value 1");
  if (si != 0 && profile.tail != 0.0)
    throw std::invalid_argument("bundle-case field needs a profile with tail value 0");
  const int k = std::abs(si);
  if (si > 0 && model.r_max >= 1.0 / std::sqrt(static_cast<double>(k)))
    throw std::domain_error("positive-case coefficients are only usable below 1/sqrt(m)");

  FormField field;
  field.self_intersection = si;
  field.radii = model.radial_grid();
  const Mat2 w2 = standard_area_form();
  field.a.reserve(field.radii.size());
  field.b.reserve(field.radii.size());
  field.omega.reserve(field.radii.size());
  for (double r : field.radii) {
    const double f = profile.f(r);
    double a = 1.0, b = 1.0;
    if (si == 0) {
      b = f;
    } else {
      b = r > 0.0 ? 1.0 - profile.f_prime(r) / r : 1.0;
      if (si < 0) {
        a = 1.0 - k * f / (1.0 + 0.5 * k * r * r);
        if (!(a > 0.0)) throw std::domain_error("head value too large: leading coefficient lost positivity");
      } else {
        a = 1.0 + k * f / (1.0 - 0.5 * k * r * r);
      }
    }
    field.a.push_back(a);
    field.b.push_back(b);
    Mat4 om = Mat4::Zero();
    om.block<2, 2>(0, 0) = a * w2;
    om.block<2, 2>(2, 2) = b * w2;
    field.omega.push_back(om);
  }
  return field;
}

InflationSweep verify_tameness(const FormField& field, const NormalModel& model) {
  const auto radii = model.radial_grid();
  if (field.radii.size() != radii.size() ||
      std::abs(field.radii.back() - radii.back()) > 1e-12)
    throw std::invalid_argument("field and model grids differ");

  InflationSweep sweep;
  sweep.eps = estimate_epsilons(model);
  sweep.min_margin = std::numeric_limits<double>::infinity();
  sweep.min_sufficient = std::numeric_limits<double>::infinity();
  const auto zs = model.z_grid();
  sweep.rows.reserve(zs.size() * radii.size());
  for (double z : zs) {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double r = radii[i];
      const Mat4 g = model.metric(z, r);
      Eigen::SelfAdjointEigenSolver<Mat4> es(g);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::domain_error("block metric degenerated inside the sweep");
      const double margin = linear_core::tameness_margin(field.omega[i], model.acs(z, r), g).margin;
      double sufficient;
      if (field.self_intersection == 0)
        sufficient = 1.0 - sweep.eps.eps1 - sweep.eps.eps2 * r * std::sqrt(field.b[i]);
      else
        sufficient = 1.0 - sweep.eps.eps1 * std::sqrt(field.a[i]) - r * sweep.eps.eps2 * std::sqrt(field.b[i]);
      sweep.rows.push_back({z, r, margin, sufficient});
      sweep.min_margin = std::min(sweep.min_margin, margin);
      sweep.min_sufficient = std::min(sweep.min_sufficient, sufficient);
    }
  }
  sweep.tame = sweep.min_margin > 0.0;
  sweep.sufficient_holds = sweep.min_sufficient > 0.0;
  return sweep;
}

double class_shift(const RadialProfile& profile, const NormalModel& model) {
  if (model.self_intersection == 0) {
    const int nodes = std::max(4000, 8 * model.n_r);
    return disk_excess_integral(profile.f, profile.head, profile.plateau_radius,
                                profile.support_radius, nodes);
  }
  return profile.head;
}

std::vector<TableRow> margin_table(const FormField& field, const NormalModel& model,
                                   const RadialProfile& profile, const InflationSweep& sweep) {
  const std::size_t n_r = field.radii.size();
  if (sweep.rows.size() % n_r != 0) throw std::invalid_argument("sweep does not cover the field grid");
  std::vector<TableRow> table(n_r);
  for (std::size_t i = 0; i < n_r; ++i) {
    const double r = field.radii[i];
    table[i] = {r,       profile.f(r),  profile.f_prime(r),
                field.a[i], field.b[i], std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
  }
  for (std::size_t k = 0; k < sweep.rows.size(); ++k) {
    const auto& row = sweep.rows[k];
    auto& entry = table[k % n_r];
    entry.margin = std::min(entry.margin, row.margin);
    entry.sufficient = std::min(entry.sufficient, row.sufficient);
  }
  (void)model;
  return table;
}

}  // namespace tamekit::inflation
