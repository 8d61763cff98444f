#include "cdens/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace cdens {

namespace {

// Effective support radius of the Gaussian pieces, matching the exact cutoff
// of the kernel evaluator.
const double z_cut = std::sqrt(92.0);

void validate_quadrature(int points)
{
  if (points < 64 || points % 2 != 0)
    throw std::invalid_argument("quadrature_points must be even and >= 64");
}

struct Range {
  double lo, hi;
  std::vector<double> knots; // segment boundaries including lo/hi
  double min_scale;
};

Range integration_range(const YCurve& curve, ExampleId example, double x,
                        bool ex1_cauchy)
{
  const TruthShape shape = true_conditional_shape(example, x, ex1_cauchy);
  Range r{ shape.lo, shape.hi, {}, shape.min_scale };
  if (curve.has_envelope) {
    r.lo = std::min(r.lo, curve.lo);
    r.hi = std::max(r.hi, curve.hi);
  }
  if (!(r.hi > r.lo))
    throw std::invalid_argument("mse: degenerate integration range");
  r.min_scale = std::min(r.min_scale, curve.min_scale);
  r.knots.push_back(r.lo);
  for (const double b : shape.breakpoints)
    if (b > r.lo && b < r.hi) r.knots.push_back(b);
  for (const double b : curve.breakpoints)
    if (b > r.lo && b < r.hi) r.knots.push_back(b);
  r.knots.push_back(r.hi);
  std::sort(r.knots.begin(), r.knots.end());
  r.knots.erase(std::unique(r.knots.begin(), r.knots.end()), r.knots.end());
  return r;
}

double aggregate_mean(const std::vector<double>& v)
{
  double acc = 0.0;
  for (const double t : v) acc += t;
  return acc / static_cast<double>(v.size());
}

void finalize(RiskReport& report)
{
  const std::size_t n = report.per_replication.size();
  report.mse_mean = aggregate_mean(report.per_replication);
  if (n >= 2) {
    double ss = 0.0;
    for (const double t : report.per_replication) {
      const double d = t - report.mse_mean;
      ss += d * d;
    }
    report.mse_stderr = std::sqrt(ss / static_cast<double>(n - 1)) /
                        std::sqrt(static_cast<double>(n));
    report.stderr_defined = true;
  } else {
    report.mse_stderr = 0.0;
    report.stderr_defined = false;
  }
}

void validate_config(const RiskConfig& cfg)
{
  if (cfg.n < 8) throw std::invalid_argument("run_cell: n must be >= 8");
  if (cfg.replications < 1)
    throw std::invalid_argument("run_cell: replications must be >= 1");
  validate_quadrature(cfg.quadrature_points);
  if (cfg.grid_per_axis < 1)
    throw std::invalid_argument("run_cell: grid_per_axis must be >= 1");
}

MarginalEstimate marginal_stage(const RiskConfig& cfg,
                                const ObservationSet& obs)
{
  MarginalConfig mcfg;
  if (cfg.fx_known) return oracle_marginal(cfg.example, cfg.x, mcfg, cfg.n);
  return gl_select_marginal(obs.marginal_xs, cfg.x, mcfg);
}

BasisSpec basis_stage(const RiskConfig& cfg, const ObservationSet& obs)
{
  if (cfg.b_hi > cfg.b_lo)
    return BasisSpec::make(cfg.basis_A, cfg.x, cfg.b_lo, cfg.b_hi, cfg.basis_r,
                           cfg.basis_r_y);
  return data_driven_basis_spec(obs, cfg.x, cfg.basis_A, cfg.basis_r,
                                cfg.basis_r_y);
}

YCurve maybe_clamp(YCurve curve, const RiskConfig& cfg)
{
  if (cfg.clamp_nonneg) return clamp_nonneg(std::move(curve));
  return curve;
}

} // namespace

YCurve make_ycurve(KernelCurve curve)
{
  YCurve y;
  if (!curve.centers.empty()) {
    const auto [mn, mx] =
        std::minmax_element(curve.centers.begin(), curve.centers.end());
    y.has_envelope = true;
    y.lo = *mn - z_cut * curve.y_scale;
    y.hi = *mx + z_cut * curve.y_scale;
  }
  y.min_scale = curve.y_scale;
  auto held = std::make_shared<KernelCurve>(std::move(curve));
  y.eval = [held](double t) { return held->evaluate(t); };
  return y;
}

YCurve make_ycurve(ProjectionFit fit)
{
  YCurve y;
  y.has_envelope = true;
  y.lo = fit.spec.b_lo;
  y.hi = fit.spec.b_hi;
  const int cells = 1 << fit.model.m2;
  const double width = fit.spec.b_width() / cells;
  for (int k = 1; k < cells; ++k)
    y.breakpoints.push_back(fit.spec.b_lo + k * width);
  auto held = std::make_shared<ProjectionFit>(std::move(fit));
  y.eval = [held](double t) { return held->evaluate(t); };
  return y;
}

YCurve truth_ycurve(ExampleId example, double x, bool ex1_cauchy)
{
  const TruthShape shape = true_conditional_shape(example, x, ex1_cauchy);
  YCurve y;
  y.has_envelope = true;
  y.lo = shape.lo;
  y.hi = shape.hi;
  y.breakpoints = shape.breakpoints;
  y.min_scale = shape.min_scale;
  y.eval = [example, x, ex1_cauchy](double t) {
    return true_conditional_density(example, x, t, ex1_cauchy);
  };
  return y;
}

YCurve clamp_nonneg(YCurve curve)
{
  YCurve y = curve;
  auto inner = curve.eval;
  y.eval = [inner](double t) { return std::max(inner(t), 0.0); };
  return y;
}

std::pair<double, double> mse_range(const YCurve& curve, ExampleId example,
                                    double x, bool ex1_cauchy)
{
  const Range r = integration_range(curve, example, x, ex1_cauchy);
  return { r.lo, r.hi };
}

double mse(const YCurve& curve, ExampleId example, double x,
           int quadrature_points, bool ex1_cauchy)
{
  validate_quadrature(quadrature_points);
  const Range r = integration_range(curve, example, x, ex1_cauchy);
  const double span = r.hi - r.lo;

  double total = static_cast<double>(quadrature_points);
  if (std::isfinite(r.min_scale) && r.min_scale > 0.0)
    total = std::max(total, std::ceil(span / (r.min_scale / 6.0)));

  const auto integrand = [&](double yv) {
    const double est = curve.eval(yv);
    if (!std::isfinite(est))
      throw std::runtime_error("mse: non-finite curve value");
    const double diff = est - true_conditional_density(example, x, yv, ex1_cauchy);
    return diff * diff;
  };

  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < r.knots.size(); ++s) {
    const double a = r.knots[s], b = r.knots[s + 1];
    const double len = b - a;
    int ns = static_cast<int>(std::ceil(total * len / span));
    ns = std::max(ns, 2);
    if (ns % 2 != 0) ++ns;
    const double h = len / ns;
    // Knots mark potential jumps (piecewise fits are right-continuous), so
    // take one-sided limits at the segment ends: nudging by len * 1e-12 picks
    // the correct side of a jump while perturbing smooth integrands by far
    // less than the quadrature error.
    const double nudge = len * 1e-12;
    double sum = integrand(a + nudge) + integrand(b - nudge);
    for (int k = 1; k < ns; ++k)
      sum += integrand(a + k * h) * (k % 2 != 0 ? 4.0 : 2.0);
    acc += sum * h / 3.0;
  }
  return acc;
}

std::vector<RiskReport> run_cells_eta_batch(const RiskConfig& cfg,
                                            const std::vector<double>& etas)
{
  validate_config(cfg);
  if (etas.empty())
    throw std::invalid_argument("run_cells_eta_batch: empty eta list");
  for (const double eta : etas)
    if (eta <= -1.0)
      throw std::invalid_argument("run_cells_eta_batch: eta must exceed -1");

  std::vector<RiskReport> reports(etas.size());
  for (std::size_t e = 0; e < etas.size(); ++e) {
    reports[e].config = cfg;
    reports[e].config.eta = etas[e];
    reports[e].per_replication.reserve(
        static_cast<std::size_t>(cfg.replications));
  }

  const GridMode kmode =
      cfg.strict_grid ? GridMode::strict : GridMode::practical;
  const ModelGridMode pmode =
      cfg.strict_grid ? ModelGridMode::strict_cm : ModelGridMode::practical;

  for (int rep = 1; rep <= cfg.replications; ++rep) {
    const ObservationSet obs =
        generate(cfg.example, cfg.n, cfg.base_seed + static_cast<std::uint64_t>(rep),
                 cfg.ex1_cauchy);
    const MarginalEstimate fX = marginal_stage(cfg, obs);

    if (cfg.estimator == EstimatorKind::kernel) {
      const BandwidthGrid grid =
          build_bandwidth_grid(cfg.n, fX.delta_hat, cfg.grid_per_axis, kmode);
      const auto dist = kernel_distance_matrix(obs, fX, grid, cfg.x);
      for (std::size_t e = 0; e < etas.size(); ++e) {
        const auto [best, trace] =
            gl_select_from_distances(dist, grid, etas[e]);
        (void)trace;
        YCurve yc = maybe_clamp(
            make_ycurve(kernel_estimate(obs, fX, grid.pairs[best], cfg.x)),
            cfg);
        reports[e].per_replication.push_back(
            mse(yc, cfg.example, cfg.x, cfg.quadrature_points, cfg.ex1_cauchy));
      }
    } else {
      const BasisSpec spec = basis_stage(cfg, obs);
      const ModelGrid grid =
          build_model_grid(cfg.n, fX.delta_hat, spec, pmode);
      for (std::size_t e = 0; e < etas.size(); ++e) {
        auto [fit, trace] = gl_select_model(obs, fX, grid, spec, cfg.x,
                                            etas[e], cfg.simplified_penalty);
        (void)trace;
        YCurve yc = maybe_clamp(make_ycurve(std::move(fit)), cfg);
        reports[e].per_replication.push_back(
            mse(yc, cfg.example, cfg.x, cfg.quadrature_points, cfg.ex1_cauchy));
      }
    }
  }
  for (auto& report : reports) finalize(report);
  return reports;
}

RiskReport run_cell(const RiskConfig& cfg)
{
  auto reports = run_cells_eta_batch(cfg, { cfg.eta });
  return std::move(reports[0]);
}

double oracle_ratio(const RiskConfig& cfg)
{
  validate_config(cfg);
  if (cfg.eta <= -1.0)
    throw std::invalid_argument("oracle_ratio: eta must exceed -1");

  const GridMode kmode =
      cfg.strict_grid ? GridMode::strict : GridMode::practical;
  const ModelGridMode pmode =
      cfg.strict_grid ? ModelGridMode::strict_cm : ModelGridMode::practical;

  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(cfg.replications));
  for (int rep = 1; rep <= cfg.replications; ++rep) {
    const ObservationSet obs =
        generate(cfg.example, cfg.n, cfg.base_seed + static_cast<std::uint64_t>(rep),
                 cfg.ex1_cauchy);
    const MarginalEstimate fX = marginal_stage(cfg, obs);

    double selected_mse = 0.0;
    double best_mse = 0.0;
    if (cfg.estimator == EstimatorKind::kernel) {
      const BandwidthGrid grid =
          build_bandwidth_grid(cfg.n, fX.delta_hat, cfg.grid_per_axis, kmode);
      const auto dist = kernel_distance_matrix(obs, fX, grid, cfg.x);
      const std::size_t best =
          gl_select_from_distances(dist, grid, cfg.eta).first;
      bool first = true;
      for (std::size_t j = 0; j < grid.pairs.size(); ++j) {
        YCurve yc = maybe_clamp(
            make_ycurve(kernel_estimate(obs, fX, grid.pairs[j], cfg.x)), cfg);
        const double m =
            mse(yc, cfg.example, cfg.x, cfg.quadrature_points, cfg.ex1_cauchy);
        if (j == best) selected_mse = m;
        if (first || m < best_mse) best_mse = m;
        first = false;
      }
    } else {
      const BasisSpec spec = basis_stage(cfg, obs);
      const ModelGrid grid = build_model_grid(cfg.n, fX.delta_hat, spec, pmode);
      auto [fit, trace] = gl_select_model(obs, fX, grid, spec, cfg.x, cfg.eta,
                                          cfg.simplified_penalty);
      (void)trace;
      selected_mse = mse(maybe_clamp(make_ycurve(std::move(fit)), cfg),
                         cfg.example, cfg.x, cfg.quadrature_points,
                         cfg.ex1_cauchy);
      bool first = true;
      for (const ModelIndex m : grid.models) {
        YCurve yc = maybe_clamp(
            make_ycurve(fit_projection(obs, m, spec, cfg.x, fX.delta_hat,
                                       cfg.eta)),
            cfg);
        const double v =
            mse(yc, cfg.example, cfg.x, cfg.quadrature_points, cfg.ex1_cauchy);
        if (first || v < best_mse) best_mse = v;
        first = false;
      }
    }
    ratios.push_back(best_mse > 0.0 ? selected_mse / best_mse : 1.0);
  }

  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  if (n % 2 == 1) return ratios[n / 2];
  return 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
}

EstimateResult estimate_once(const RiskConfig& cfg)
{
  validate_config(cfg);
  if (cfg.eta <= -1.0)
    throw std::invalid_argument("estimate_once: eta must exceed -1");
  const ObservationSet obs =
      generate(cfg.example, cfg.n, cfg.base_seed + 1, cfg.ex1_cauchy);
  const MarginalEstimate fX = marginal_stage(cfg, obs);

  EstimateResult result;
  if (cfg.estimator == EstimatorKind::kernel) {
    const BandwidthGrid grid = build_bandwidth_grid(
        cfg.n, fX.delta_hat, cfg.grid_per_axis,
        cfg.strict_grid ? GridMode::strict : GridMode::practical);
    auto [curve, trace] = gl_select_bandwidth(obs, fX, grid, cfg.x, cfg.eta);
    result.trace = std::move(trace);
    result.curve = maybe_clamp(make_ycurve(std::move(curve)), cfg);
  } else {
    const BasisSpec spec = basis_stage(cfg, obs);
    const ModelGrid grid = build_model_grid(
        cfg.n, fX.delta_hat, spec,
        cfg.strict_grid ? ModelGridMode::strict_cm : ModelGridMode::practical);
    auto [fit, trace] =
        gl_select_model(obs, fX, grid, spec, cfg.x, cfg.eta,
                        cfg.simplified_penalty);
    result.trace = std::move(trace);
    result.curve = maybe_clamp(make_ycurve(std::move(fit)), cfg);
  }
  result.mse_value = mse(result.curve, cfg.example, cfg.x,
                         cfg.quadrature_points, cfg.ex1_cauchy);
  const auto [lo, hi] =
      mse_range(result.curve, cfg.example, cfg.x, cfg.ex1_cauchy);
  result.range_lo = lo;
  result.range_hi = hi;
  return result;
}

} // namespace cdens
