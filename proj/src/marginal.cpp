#include "cdens/marginal.hpp"

#include "cdens/math_util.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace cdens {

namespace {

std::string format_h(double h)
{
  std::ostringstream os;
  os.precision(6);
  os << "h=" << h;
  return os.str();
}

//! Linear-interpolation sample quantile (R type 7) on sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p)
{
  const auto n = sorted.size();
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

//! Gaussian KDE value (1/n) sum K_h(t - X_i); weights below the 9-sigma
//! truncation of exp_neg contribute exactly 0, consistent with every other
//! kernel evaluation in the library.
double kde_at(const std::vector<double>& xs, double t, double h)
{
  double acc = 0.0;
  for (const double xi : xs) {
    const double z = (t - xi) / h;
    acc += exp_neg(-0.5 * z * z);
  }
  return acc / (static_cast<double>(xs.size()) * h * sqrt_2pi);
}

} // namespace

double MarginalConfig::k_n(int n) const
{
  return std::max(std::log(static_cast<double>(n)), 1.0);
}

double MarginalConfig::floor_for(int n) const
{
  return delta_floor > 0 ? delta_floor : 1.0 / static_cast<double>(n);
}

double rule_of_thumb_bandwidth(const std::vector<double>& xs)
{
  if (xs.size() < 2)
    throw std::invalid_argument("rule_of_thumb_bandwidth: need at least 2 values");
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (const double v : xs) mean += v;
  mean /= n;
  double ss = 0.0;
  for (const double v : xs) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  const double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0)
    throw std::runtime_error("rule_of_thumb_bandwidth: sample has zero spread");
  return 1.06 * spread * std::pow(n, -0.2);
}

double marginal_pen(int n, double h, double pilot_at_x, double tuning_constant)
{
  if (n <= 0 || h <= 0.0)
    throw std::invalid_argument("marginal_pen: n and h must be positive");
  const double pilot = std::max(pilot_at_x, 0.0);
  return tuning_constant * gauss_l2_1d * (1.0 + gauss_l1) *
         std::sqrt(std::abs(std::log(h)) * pilot / (static_cast<double>(n) * h));
}

MarginalEstimate gl_select_marginal(const std::vector<double>& xs, double x,
                                    const MarginalConfig& cfg)
{
  if (xs.empty())
    throw std::invalid_argument("gl_select_marginal: empty sample");
  if (cfg.grid_size < 1)
    throw std::invalid_argument("gl_select_marginal: empty bandwidth grid");

  const int n = static_cast<int>(xs.size());
  const double h_rot = rule_of_thumb_bandwidth(xs);
  const double pilot = kde_at(xs, x, h_rot);

  // Geometric grid on [h_rot/4, 4 h_rot].
  std::vector<double> grid(static_cast<std::size_t>(cfg.grid_size));
  if (cfg.grid_size == 1) {
    grid[0] = h_rot;
  } else {
    const double lo = h_rot / 4.0, hi = 4.0 * h_rot;
    const double step = std::log(hi / lo) / (cfg.grid_size - 1);
    for (int k = 0; k < cfg.grid_size; ++k)
      grid[static_cast<std::size_t>(k)] = lo * std::exp(step * k);
  }

  std::vector<double> f_single(grid.size()), pen(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    f_single[j] = kde_at(xs, x, grid[j]);
    pen[j] = marginal_pen(n, grid[j], pilot, cfg.tuning_constant);
  }

  MarginalEstimate out;
  std::size_t best = 0;
  double best_obj = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double h_conv = std::sqrt(grid[i] * grid[i] + grid[j] * grid[j]);
      const double excess =
          std::abs(kde_at(xs, x, h_conv) - f_single[j]) - pen[j];
      a = std::max(a, excess);
    }
    const double obj = a + pen[i];
    out.trace.records.push_back({ format_h(grid[i]), pen[i], a, obj });
    // Ties go to the largest bandwidth; the grid is ascending, so >= keeps
    // the later (larger) candidate.
    if (i == 0 || obj <= best_obj) {
      best = i;
      best_obj = obj;
    }
  }
  out.trace.chosen = out.trace.records[best].id;
  out.selected_bandwidth_h0 = grid[best];

  const double h0 = grid[best];
  auto data = std::make_shared<std::vector<double>>(xs);
  out.evaluate = [data, h0](double t) { return kde_at(*data, t, h0); };

  const double half = 2.0 * cfg.neighborhood_halfwidth_A / cfg.k_n(n);
  const int pts = std::max(cfg.neighborhood_grid_points, 2);
  double lo_val = std::abs(out.evaluate(x - half));
  double hi_val = lo_val;
  for (int k = 1; k < pts; ++k) {
    const double t = x - half + 2.0 * half * k / (pts - 1);
    const double v = std::abs(out.evaluate(t));
    lo_val = std::min(lo_val, v);
    hi_val = std::max(hi_val, v);
  }
  out.delta_hat = std::max(lo_val, cfg.floor_for(n));
  out.sup_hat = std::max(hi_val, out.delta_hat);
  return out;
}

MarginalEstimate oracle_marginal(ExampleId example, double x,
                                 const MarginalConfig& cfg, int n)
{
  MarginalEstimate out;
  out.evaluate = [example](double t) { return true_marginal_density(example, t); };
  out.trace.chosen = "oracle";

  const double half = 2.0 * cfg.neighborhood_halfwidth_A / cfg.k_n(n);
  const int pts = std::max(cfg.neighborhood_grid_points, 2);
  double lo_val = std::abs(out.evaluate(x - half));
  double hi_val = lo_val;
  for (int k = 1; k < pts; ++k) {
    const double t = x - half + 2.0 * half * k / (pts - 1);
    const double v = std::abs(out.evaluate(t));
    lo_val = std::min(lo_val, v);
    hi_val = std::max(hi_val, v);
  }
  out.delta_hat = std::max(lo_val, cfg.floor_for(n));
  out.sup_hat = std::max(hi_val, out.delta_hat);
  return out;
}

} // namespace cdens
