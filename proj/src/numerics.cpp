#include "tamekit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tamekit {

Mat4 standard_omega() {
  Mat4 m = Mat4::Zero();
  m.block<2, 2>(0, 0) = standard_area_form();
  m.block<2, 2>(2, 2) = standard_area_form();
  return m;
}

Mat4 standard_acs() {
  Mat4 m = Mat4::Zero();
  m.block<2, 2>(0, 0) = standard_j2();
  m.block<2, 2>(2, 2) = standard_j2();
  return m;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Vec4 Rng::unit_vec4() {
  Vec4 v;
  do {
    for (int i = 0; i < 4; ++i) v[i] = normal();
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

std::vector<Vec4> lattice_sphere3(int n) {
  if (n <= 0) throw std::invalid_argument("lattice_sphere3: n must be positive");
  // Stratified height plus a plastic-constant additive sequence for the two
  // angles, mapped through (h, phi1, phi2) -> (sqrt(1-h) e^{i phi1},
  // sqrt(h) e^{i phi2}). The cubic minimal polynomial of p rules out rational
  // relations between the two angle increments.
  const double p = 1.3247179572447460;  // real root of x^3 = x + 1
  const double a1 = 1.0 / p;
  const double a2 = 1.0 / (p * p);
  std::vector<Vec4> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double h = (i + 0.5) / n;
    const double t1 = std::fmod(0.5 + a1 * (i + 1), 1.0);
    const double t2 = std::fmod(0.5 + a2 * (i + 1), 1.0);
    const double r1 = std::sqrt(1.0 - h);
    const double r2 = std::sqrt(h);
    pts.emplace_back(r1 * std::cos(2.0 * kPi * t1), r1 * std::sin(2.0 * kPi * t1),
                     r2 * std::cos(2.0 * kPi * t2), r2 * std::sin(2.0 * kPi * t2));
  }
  return pts;
}

namespace {

// Pattern search on the unit sphere maximizing |M v|.
template <typename MatT, typename VecT>
double polish_on_sphere(const MatT& m, VecT v, int iters) {
  double best = (m * v).norm();
  double step = 0.25;
  const int dim = static_cast<int>(v.size());
  for (int it = 0; it < iters; ++it) {
    bool improved = false;
    for (int i = 0; i < dim; ++i) {
      for (double sgn : {1.0, -1.0}) {
        VecT cand = v;
        cand[i] += sgn * step;
        cand.normalize();
        const double val = (m * cand).norm();
        if (val > best) {
          best = val;
          v = cand;
          improved = true;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }
  return best;
}

}  // namespace

double operator_norm(const Mat4& m, int samples, int polish_iters) {
  const auto pts = lattice_sphere3(samples);
  Vec4 best_v = pts.front();
  double best = (m * best_v).norm();
  for (const auto& v : pts) {
    const double val = (m * v).norm();
    if (val > best) {
      best = val;
      best_v = v;
    }
  }
  return polish_on_sphere(m, best_v, polish_iters);
}

double operator_norm(const Mat2& m, int samples, int polish_iters) {
  Vec2 best_v(1.0, 0.0);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double a = kPi * i / samples;  // antipodal symmetry: half turn suffices
    const Vec2 v(std::cos(a), std::sin(a));
    const double val = (m * v).norm();
    if (val > best) {
      best = val;
      best_v = v;
    }
  }
  return polish_on_sphere(m, best_v, polish_iters);
}

double spectral_norm(const Mat2& m) {
  // Largest singular value of a 2x2 matrix in closed form.
  const double f = m.squaredNorm();
  const double det = m.determinant();
  const double disc = std::max(0.0, f * f - 4.0 * det * det);
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
  if (n < 2) n = 2;
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  return acc * h / 3.0;
}

double PiecewiseAffine::value(double t) const {
  if (x.empty()) return 0.0;
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + w * (y[i] - y[i - 1]);
}

double PiecewiseAffine::slope(double t) const {
  if (x.size() < 2 || t <= x.front() || t >= x.back()) return 0.0;
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  return (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
}

SmoothedShape::SmoothedShape(PiecewiseAffine base, double width)
    : base_(std::move(base)), width_(width) {
  if (width_ <= 0.0) throw std::invalid_argument("SmoothedShape: width must be positive");
  // Tabulate the normalized bump exp(-1/(1-x^2)) on [-1,1] with Simpson
  // weights folded in, so a convolution is a single weighted sum.
  const int n = 512;  // even
  nodes_.resize(n + 1);
  weights_.resize(n + 1);
  const double h = 2.0 / n;
  double mass = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double xx = -1.0 + i * h;
    const double inner = 1.0 - xx * xx;
    const double k = inner > 1e-14 ? std::exp(-1.0 / inner) : 0.0;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 0 ? 2.0 : 4.0);
    nodes_[i] = xx;
    weights_[i] = w * k * h / 3.0;
    mass += weights_[i];
  }
  for (auto& w : weights_) w /= mass;
}

double SmoothedShape::value(double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    acc += weights_[i] * base_.value(t - width_ * nodes_[i]);
  return acc;
}

double SmoothedShape::derivative(double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    acc += weights_[i] * base_.slope(t - width_ * nodes_[i]);
  return acc;
}

}  // namespace tamekit
