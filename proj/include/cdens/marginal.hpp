#pragma once

#include "cdens/sampling.hpp"
#include "cdens/trace.hpp"

#include <functional>
#include <vector>

namespace cdens {

struct MarginalConfig {
  int grid_size = 10;                  // bandwidths in the selection grid
  double tuning_constant = 2.2;        // pen(n,h) front factor
  double neighborhood_halfwidth_A = 1; // A in V_n(x) = [x - 2A/k_n, x + 2A/k_n]
  int neighborhood_grid_points = 21;   // evaluation grid over V_n(x)
  double delta_floor = 0;              // 0 means the default 1/n

  double k_n(int n) const;             // max(log n, 1)
  double floor_for(int n) const;       // delta_floor, defaulting to 1/n
};

//! Pointwise marginal-density estimate at x together with the V_n(x)
//! neighborhood statistics consumed by the conditional-density penalties.
struct MarginalEstimate {
  double selected_bandwidth_h0 = 0;
  std::function<double(double)> evaluate;
  double delta_hat = 0; // max(grid minimum of |fhat_X| over V_n(x), floor)
  double sup_hat = 0;   // grid maximum of |fhat_X| over V_n(x), >= delta_hat
  SelectionTrace trace;
};

//! Silverman rule of thumb: 1.06 min(sd, IQR/1.34) n^(-1/5).
//! Throws if the spread term vanishes.
double rule_of_thumb_bandwidth(const std::vector<double>& xs);

//! Penalty of the pointwise marginal selection rule:
//! pen(n,h) = c ||K||_2 (1 + ||K||_1) sqrt(|log h| pilot / (n h))
//! with the one-dimensional Gaussian norms and pilot = f~_X(x).
double marginal_pen(int n, double h, double pilot_at_x, double tuning_constant = 2.2);

//! Goldenshluger-Lepski selection of the marginal bandwidth at x over a
//! geometric grid [h_ROT/4, 4 h_ROT]; returns the selected kernel estimator
//! (one bandwidth, evaluable anywhere) plus delta_hat / sup_hat over V_n(x).
MarginalEstimate gl_select_marginal(const std::vector<double>& xs, double x,
                                    const MarginalConfig& cfg = {});

//! Known-f_X counterpart: wraps the exact marginal density of the example,
//! with delta_hat / sup_hat taken from the true density on the V_n(x) grid
//! (floor-clamped, which is a no-op when the density is positive there).
MarginalEstimate oracle_marginal(ExampleId example, double x,
                                 const MarginalConfig& cfg, int n);

} // namespace cdens
