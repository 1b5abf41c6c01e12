#include "tamekit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace tamekit::pipeline {

namespace {

Mat42 plane_basis() {
  Mat42 e = Mat42::Zero();
  e(0, 0) = 1.0;
  e(1, 1) = 1.0;
  return e;
}

// Skew data of a block structure along the curve, read off in a unitary frame.
linear_core::SkewPart skew_of(const Mat4& j) {
  const auto sd = linear_core::unitary_split(standard_omega(), j, plane_basis());
  return linear_core::skew_norm(sd);
}

void require_block_shape(const Mat2& b, double z) {
  if (std::abs(b(0, 0) + b(1, 1)) > 1e-9 || std::abs(b(0, 1) - b(1, 0)) > 1e-9) {
    throw std::invalid_argument("curve skew block at z=" + std::to_string(z) +
                                " is not trace-free symmetric");
  }
}

struct Lattice {
  std::vector<Vec4> pts;
  std::vector<double> radius;
};

// Sample lattice for margin sweeps: circle points times radial shells times
// angles, all at y = 0 (the fields built here never depend on y).
Lattice tube_lattice(const jet_extension::CircleGrid& grid) {
  Lattice lat;
  const auto zs = grid.zs();
  const std::size_t stride = static_cast<std::size_t>(std::max(1, grid.n_z / 64));
  for (std::size_t iz = 0; iz < zs.size(); iz += stride) {
    const double z = zs[iz];
    for (int ir = 0; ir <= grid.n_v; ++ir) {
      const double r = grid.tube_radius * static_cast<double>(ir) / static_cast<double>(grid.n_v);
      const int n_angles = ir == 0 ? 1 : 8;
      for (int a = 0; a < n_angles; ++a) {
        const double th = 2.0 * kPi * static_cast<double>(a) / 8.0;
        lat.pts.emplace_back(z, 0.0, r * std::cos(th), r * std::sin(th));
        lat.radius.push_back(r);
      }
    }
  }
  return lat;
}

double field_margin(const AmbientField& f, const Vec4& p) {
  return linear_core::tameness_margin(standard_omega(), f(p), Mat4::Identity()).margin;
}

std::vector<double> sweep_margins(const AmbientField& f, const Lattice& lat) {
  std::vector<double> out(lat.pts.size());
  for (std::size_t k = 0; k < lat.pts.size(); ++k) out[k] = field_margin(f, lat.pts[k]);
  return out;
}

// Fiberwise correction between two isotopy times, in graph form. Built so
// that the chained pullbacks telescope: d(psi_i) = Psi_{t_i} along the curve
// requires Phi_i = Psi_{t_lo}^{-1} Psi_{t_hi}.
Mat4 fiber_step(const std::function<Mat2(double)>& b, double t_lo, double t_hi, double x) {
  const auto ctx = linear_isotopy::make_context(b(x));
  const auto lo = linear_isotopy::psi(ctx, t_lo);
  const auto hi = linear_isotopy::psi(ctx, t_hi);
  return Mat4(lo.psi_inverse * hi.psi);
}

}  // namespace

CurveField make_curve(std::function<Mat2(double)> b, const jet_extension::CircleGrid& grid) {
  if (!b) throw std::invalid_argument("make_curve: skew callable is required");
  if (grid.n_z < 8 || grid.n_v < 2 || !(grid.tube_radius > 0.0)) {
    throw std::invalid_argument("make_curve: need n_z >= 8, n_v >= 2, positive tube radius");
  }
  CurveField curve;
  curve.grid = grid;
  curve.b = std::move(b);
  const auto zs = grid.zs();
  curve.frames.reserve(zs.size());
  curve.metric.reserve(zs.size());
  for (double z : zs) {
    const Mat2 blk = curve.b(z);
    require_block_shape(blk, z);
    const double n_direct = std::hypot(blk(0, 0), blk(0, 1));
    if (n_direct >= 2.0) {
      // not tame here; leave placeholder frame data, skew_field flags the point
      curve.frames.push_back(Mat4::Identity());
      curve.metric.push_back(Mat4::Identity());
      continue;
    }
    const Mat4 j = linear_core::block_acs(blk);
    const auto sd0 = linear_core::split(standard_omega(), j, plane_basis());
    curve.frames.push_back(linear_core::unitary_frame(sd0));
    curve.metric.push_back(linear_core::unitary_split(standard_omega(), j, plane_basis()).g);
  }
  return curve;
}

AmbientField initial_field(const CurveField& curve) {
  const auto b = curve.b;
  return [b](const Vec4& p) { return linear_core::block_acs(b(p[0])); };
}

SkewField skew_field(const CurveField& curve) {
  SkewField out;
  const auto zs = curve.zs();
  out.points.reserve(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const Mat2 blk = curve.b(zs[i]);
    require_block_shape(blk, zs[i]);
    const double n_direct = std::hypot(blk(0, 0), blk(0, 1));
    linear_core::SkewPart sp;
    if (n_direct >= 2.0) {
      sp.a = blk(0, 0);
      sp.b = blk(0, 1);
      sp.n = n_direct;
      if (out.first_bad < 0) out.first_bad = static_cast<int>(i);
      out.tame = false;
    } else {
      sp = skew_of(linear_core::block_acs(blk));
      if (std::abs(sp.n - n_direct) > 1e-9) {
        throw std::logic_error("skew_field: frame norm disagrees with the block norm");
      }
    }
    out.n_max = std::max(out.n_max, sp.n);
    out.points.push_back(sp);
  }
  return out;
}

PipelineParams choose_params(const CurveField& curve, double epsilon_hint) {
  if (!(epsilon_hint > 0.0)) throw std::invalid_argument("choose_params: hint must be positive");
  const auto sf = skew_field(curve);
  if (!sf.tame) {
    throw std::domain_error("choose_params: curve point " + std::to_string(sf.first_bad) +
                            " has skew norm >= 2");
  }

  PipelineParams params;
  params.n_max = sf.n_max;
  params.eta = 0.9 * (1.0 - sf.n_max / 2.0) / 2.0;

  // family norms over the curve and the deformation interval, with headroom
  const auto zs = curve.zs();
  const double h = (2.0 * kPi / static_cast<double>(curve.grid.n_z)) / 4.0;
  double worst = 0.0;
  for (double z : zs) {
    for (int k = 0; k <= 8; ++k) {
      const double t = 0.5 * static_cast<double>(k) / 8.0;
      auto pulled_at = [&](double x) {
        return linear_isotopy::psi(linear_isotopy::make_context(curve.b(x)), t).pulled_j;
      };
      worst = std::max(worst, operator_norm(pulled_at(z)));
      const Mat4 dj = (pulled_at(z + h) - pulled_at(z - h)) / (2.0 * h);
      worst = std::max(worst, operator_norm(dj));
    }
  }
  params.c = 1.1 * worst;

  // calibration runs on its own fixed coarse grid for determinism and speed
  jet_extension::CircleGrid calib_grid;
  calib_grid.n_z = 48;
  calib_grid.tube_radius = curve.grid.tube_radius;
  calib_grid.n_v = 6;
  const auto cal = jet_extension::calibrate_constants(calib_grid);
  params.kappa = cal.kappa;
  params.epsilon_0 = cal.epsilon_0;

  params.epsilon = std::min(epsilon_hint, 0.9 * cal.epsilon_0);
  params.partition = linear_isotopy::time_partition(std::max(sf.n_max, 1e-9), params.epsilon);
  return params;
}

StabilityResult stability_check(const AmbientField& before, const AmbientField& after, double eta,
                                const jet_extension::CircleGrid& grid) {
  const auto lat = tube_lattice(grid);
  StabilityResult res;
  res.min_after = std::numeric_limits<double>::infinity();
  for (const Vec4& p : lat.pts) {
    const double mb = field_margin(before, p);
    const double ma = field_margin(after, p);
    res.max_delta = std::max(res.max_delta, std::abs(ma - mb));
    res.min_after = std::min(res.min_after, ma);
  }
  res.ok = res.max_delta < eta && res.min_after > 0.0;
  return res;
}

PreparedField prepare(const CurveField& curve, const PipelineParams& params) {
  if (!(params.eta > 0.0) || params.partition.times.size() < 2 ||
      !(params.shrink_factor > 0.0 && params.shrink_factor < 1.0) || params.max_retries < 0) {
    throw std::invalid_argument("prepare: invalid params");
  }
  const auto sf = skew_field(curve);
  if (!sf.tame) {
    throw std::domain_error("prepare: curve point " + std::to_string(sf.first_bad) +
                            " has skew norm >= 2");
  }

  PreparedField out;
  out.j = initial_field(curve);
  out.trace.completed = true;

  const auto zs = curve.zs();
  const auto lat = tube_lattice(curve.grid);
  std::vector<double> margins = sweep_margins(out.j, lat);

  auto along_curve = [&zs](const AmbientField& f, const std::function<void(double, const Mat4&)>& fn) {
    for (double z : zs) fn(z, f(Vec4(z, 0.0, 0.0, 0.0)));
  };

  const double t_final = params.partition.times.back();
  auto finalize = [&]() {
    double n_final = 0.0;
    double mismatch = 0.0;
    double drift = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const Mat4 jz = out.j(Vec4(zs[i], 0.0, 0.0, 0.0));
      n_final = std::max(n_final, skew_of(jz).n);
      const auto ctx = linear_isotopy::make_context(curve.b(zs[i]));
      const Mat4 expected = linear_isotopy::psi(ctx, t_final).pulled_j;
      mismatch = std::max(mismatch, (jz - expected).cwiseAbs().maxCoeff());
      const Mat4 g = linear_core::unitary_split(standard_omega(), jz, plane_basis()).g;
      drift = std::max(drift, (g - curve.metric[i]).cwiseAbs().maxCoeff());
    }
    out.trace.final_n_along_z = n_final;
    out.trace.final_min_margin = *std::min_element(margins.begin(), margins.end());
    out.trace.final_pullback_mismatch = mismatch;
    out.trace.final_metric_drift = drift;
    if (out.trace.completed) {
      if (!(n_final < 1e-6)) {
        out.trace.completed = false;
        out.trace.failure = "final skew norm along the curve is not below 1e-6";
      } else if (!(out.trace.final_min_margin > 0.0)) {
        out.trace.completed = false;
        out.trace.failure = "final margin is not positive";
      } else if (mismatch > 1e-8) {
        out.trace.completed = false;
        out.trace.failure = "final field deviates from the fiberwise pullback beyond 1e-8";
      }
    }
  };

  if (sf.n_max < 1e-12) {
    // nothing to straighten
    finalize();
    return out;
  }

  const auto& times = params.partition.times;
  double theta = 0.5 * curve.grid.tube_radius;

  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double t_lo = times[i];
    const double t_hi = times[i + 1];

    const auto b = curve.b;
    jet_extension::DiffeoJet jet;
    jet.tangential_shift = [b, t_lo, t_hi](double x) {
      return Mat2(fiber_step(b, t_lo, t_hi, x).block<2, 2>(0, 2));
    };
    jet.normal_block = [b, t_lo, t_hi](double x) {
      return Mat2(fiber_step(b, t_lo, t_hi, x).block<2, 2>(2, 2));
    };

    // norm discipline along the curve, independent of the support radius
    double curve_norm = 0.0;
    along_curve(out.j, [&](double, const Mat4& jz) {
      curve_norm = std::max(curve_norm, operator_norm(jz));
    });
    const double hx = 1e-4;
    for (double z : zs) {
      const Mat4 dj =
          (out.j(Vec4(z + hx, 0.0, 0.0, 0.0)) - out.j(Vec4(z - hx, 0.0, 0.0, 0.0))) / (2.0 * hx);
      curve_norm = std::max(curve_norm, operator_norm(dj));
    }
    if (curve_norm >= params.c) {
      out.trace.completed = false;
      out.trace.failure = "step " + std::to_string(i) + ": curve norm bound exceeded";
      break;
    }

    bool placed = false;
    std::string last_failure = "no attempt ran";
    int attempt = 0;
    for (; attempt <= params.max_retries; ++attempt) {
      // the tube must keep a margin above eta before the correction lands
      double thin_min = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < lat.pts.size(); ++k) {
        if (lat.radius[k] <= theta) thin_min = std::min(thin_min, margins[k]);
      }
      if (!(thin_min > params.eta)) {
        last_failure = "margin thinness on the support tube";
        theta *= params.shrink_factor;
        continue;
      }

      const auto ext = jet_extension::extend_diffeo(jet, theta, curve.grid);
      if (!ext.invertible) {
        last_failure = "extension invertibility";
        theta *= params.shrink_factor;
        continue;
      }

      const auto prev = std::make_shared<AmbientField>(out.j);
      const auto fwd = ext.map;
      const auto dfw = ext.jacobian;
      AmbientField next = [prev, fwd, dfw](const Vec4& p) -> Mat4 {
        const Mat4 d = dfw(p);
        return Mat4(d.partialPivLu().solve((*prev)(fwd(p)) * d));
      };

      std::vector<double> margins_next = sweep_margins(next, lat);
      double max_delta = 0.0;
      double min_after = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < margins.size(); ++k) {
        max_delta = std::max(max_delta, std::abs(margins_next[k] - margins[k]));
        min_after = std::min(min_after, margins_next[k]);
      }
      if (!(max_delta < params.eta && min_after > 0.0)) {
        last_failure = "stability of the margins";
        theta *= params.shrink_factor;
        continue;
      }

      StepRecord rec;
      rec.index = static_cast<int>(i);
      rec.t_lo = t_lo;
      rec.t_hi = t_hi;
      rec.theta = theta;
      rec.input_defect = ext.input_defect;
      rec.c1_defect = ext.c1_defect;
      rec.margin_before = *std::min_element(margins.begin(), margins.end());
      rec.margin_after = min_after;
      rec.retries = attempt;
      out.j = next;
      margins = std::move(margins_next);
      double n_after = 0.0;
      along_curve(out.j, [&](double, const Mat4& jz) { n_after = std::max(n_after, skew_of(jz).n); });
      rec.n_along_z = n_after;
      out.trace.steps.push_back(rec);
      placed = true;
      break;
    }
    if (!placed) {
      out.trace.completed = false;
      out.trace.failure = "step " + std::to_string(i) + ": " + last_failure + " persisted after " +
                          std::to_string(params.max_retries) + " retries";
      break;
    }
  }

  finalize();
  return out;
}

}  // namespace tamekit::pipeline
