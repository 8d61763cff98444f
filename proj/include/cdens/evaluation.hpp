#pragma once

#include "cdens/kernel_gl.hpp"
#include "cdens/marginal.hpp"
#include "cdens/projection_gl.hpp"
#include "cdens/sampling.hpp"
#include "cdens/trace.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace cdens {

enum class EstimatorKind { kernel, projection };

//! A y-section with the metadata the quadrature needs: support envelope,
//! interior knots, and the finest smooth feature scale.
struct YCurve {
  std::function<double(double)> eval;
  bool has_envelope = false;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> breakpoints;
  double min_scale = std::numeric_limits<double>::infinity();
};

YCurve make_ycurve(KernelCurve curve);
YCurve make_ycurve(ProjectionFit fit);
YCurve truth_ycurve(ExampleId example, double x, bool ex1_cauchy = false);
YCurve clamp_nonneg(YCurve curve);

//! Pointwise MSE ∫ (curve(y) − f(x,y))² dy by breakpoint-aware composite
//! Simpson over the padded true support joined with the curve envelope.
double mse(const YCurve& curve, ExampleId example, double x,
           int quadrature_points, bool ex1_cauchy = false);

//! The integration interval the quadrature would use for this curve.
std::pair<double, double> mse_range(const YCurve& curve, ExampleId example,
                                    double x, bool ex1_cauchy = false);

struct RiskConfig {
  ExampleId example = ExampleId::Ex1;
  EstimatorKind estimator = EstimatorKind::kernel;
  double x = 0.5;
  int n = 1000;
  double eta = 1.0;
  bool fx_known = false;
  int replications = 100;
  std::uint64_t base_seed = 20250819;
  int quadrature_points = 2048;
  bool strict_grid = false;
  bool clamp_nonneg = false;
  bool ex1_cauchy = false;
  int grid_per_axis = 10;
  double basis_A = 1.0;
  int basis_r = 0;
  int basis_r_y = 0;
  bool simplified_penalty = true;
  double b_lo = 0.0; //!< y-range override; used when b_hi > b_lo.
  double b_hi = 0.0;
};

struct RiskReport {
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  bool stderr_defined = false;
  std::vector<double> per_replication;
  RiskConfig config;
};

//! Monte Carlo risk of the configured estimator: per replication, fresh data
//! (seed base_seed + rep), marginal stage, GL selection, MSE quadrature.
RiskReport run_cell(const RiskConfig& cfg);

//! Same replications across several η values; for the kernel estimator the
//! per-replication distance matrices are shared across η (selection and σ are
//! the only η-dependent pieces), giving results identical to one run_cell per
//! η at a fraction of the cost.
std::vector<RiskReport> run_cells_eta_batch(const RiskConfig& cfg,
                                            const std::vector<double>& etas);

//! Median over replications of MSE(selected) / min over the candidate grid of
//! the true per-candidate MSE.
double oracle_ratio(const RiskConfig& cfg);

//! One pipeline pass (replication index 1) exposing the fitted curve and the
//! selection trace; serves the curve-export command.
struct EstimateResult {
  YCurve curve;
  SelectionTrace trace;
  double mse_value = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
};

EstimateResult estimate_once(const RiskConfig& cfg);

} // namespace cdens
