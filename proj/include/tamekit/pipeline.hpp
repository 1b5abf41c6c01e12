#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tamekit/jet_extension.hpp"
#include "tamekit/linear_core.hpp"
#include "tamekit/linear_isotopy.hpp"
#include "tamekit/numerics.hpp"

// Iterative preparation of an almost complex structure along a closed curve:
// walk the straightening isotopy in small time steps, extend each fiberwise
// step to an ambient diffeomorphism supported in a shrinking tube, pull the
// structure back, and verify margins after every step. The run ends with a
// structure whose skew part vanishes along the curve while staying tame on
// the whole model, or with a trace that names the bound that failed.

namespace tamekit::pipeline {

// Ambient structure field on tubular coordinates (x, y, v1, v2).
using AmbientField = std::function<Mat4(const Vec4&)>;

// Data along the curve: the skew block of the structure at each parameter
// value, plus the unitary frames and canonical metric samples the block was
// read off in. The tubular grid fixes where the sweeps sample.
struct CurveField {
  jet_extension::CircleGrid grid;
  std::function<Mat2(double)> b;  // skew block, periodic in the parameter
  std::vector<Mat4> frames;      // per-point unitary frame
  std::vector<Mat4> metric;      // canonical metric samples along the curve
  std::vector<double> zs() const { return grid.zs(); }
};

// Samples the skew callable on the grid, validates the block shape at every
// point and computes frames and metric samples.
CurveField make_curve(std::function<Mat2(double)> b, const jet_extension::CircleGrid& grid);

// The structure determined by the curve data, constant in the normal
// directions: p -> [[j2, B(x)], [0, j2]].
AmbientField initial_field(const CurveField& curve);

struct SkewField {
  std::vector<linear_core::SkewPart> points;
  double n_max = 0.0;
  bool tame = true;    // every point has skew norm < 2
  int first_bad = -1;  // index of the first offending point, -1 if none
};

// Per-point skew norms along the curve and their maximum.
SkewField skew_field(const CurveField& curve);

struct PipelineParams {
  double eta = 0.0;        // stability budget, below (1 - n_max/2)/2
  double c = 0.0;          // measured bound on the structure family and its curve derivative
  double epsilon = 0.0;    // per-step defect budget for the time partition
  double kappa = 0.0;      // measured extension amplification
  double epsilon_0 = 0.0;  // measured invertibility margin of the extension
  double n_max = 0.0;
  double shrink_factor = 0.5;
  int max_retries = 20;
  linear_isotopy::TimePartition partition;
};

// Measures every constant on the given curve: eta at 0.9 of its bound, c at
// 1.1 of the sampled maxima of the deformed family and its curve derivative
// (the corrections carry no quadratic normal term), (kappa, epsilon_0) from
// the extension calibration battery, epsilon as the smaller of the hint and
// 0.9 * epsilon_0, and the time partition for that epsilon.
PipelineParams choose_params(const CurveField& curve, double epsilon_hint = 0.1);

struct StabilityResult {
  bool ok = false;
  double max_delta = 0.0;  // largest margin change over the sweep
  double min_after = 0.0;  // smallest margin of the new field
};

// Direct verification replacing the existential stability constant: the
// margin may move by less than eta anywhere and must stay positive.
StabilityResult stability_check(const AmbientField& before, const AmbientField& after,
                                double eta, const jet_extension::CircleGrid& grid);

struct StepRecord {
  int index = 0;
  double t_lo = 0.0, t_hi = 0.0;
  double theta = 0.0;          // support radius actually used
  double input_defect = 0.0;   // fiberwise step distance from the identity
  double c1_defect = 0.0;      // measured defect of the extended map
  double margin_before = 0.0;  // min over the sweep
  double margin_after = 0.0;
  double n_along_z = 0.0;  // max skew norm along the curve after the step
  int retries = 0;
};

struct PipelineTrace {
  std::vector<StepRecord> steps;
  double final_n_along_z = 0.0;
  double final_min_margin = 0.0;
  double final_pullback_mismatch = 0.0;  // against the fiberwise half-time pullback
  double final_metric_drift = 0.0;       // canonical metric along the curve vs the input samples
  bool completed = false;
  std::string failure;  // names the bound that failed, empty on success
};

struct PreparedField {
  AmbientField j;
  PipelineTrace trace;
};

// The full iteration. Support radii start at half the tube radius, never
// grow, and shrink geometrically when a step fails its checks; a step that
// stays failed after max_retries aborts the run with the partial trace.
PreparedField prepare(const CurveField& curve, const PipelineParams& params);

}  // namespace tamekit::pipeline
