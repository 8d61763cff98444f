#pragma once

#include "cdens/marginal.hpp"
#include "cdens/sampling.hpp"
#include "cdens/trace.hpp"

#include <vector>

namespace cdens {

struct Bandwidth2 {
  double h1 = 0; // x-direction
  double h2 = 0; // y-direction
};

enum class GridMode {
  practical, // geometric grid on [n^-0.9, 0.5] per axis (simulation practice)
  strict,    // literal (CK) bounds per axis, falling back per axis when empty
};

struct BandwidthGrid {
  std::vector<Bandwidth2> pairs;
  int n = 0;
  double delta_hat = 0;
  bool relaxed = false; // true if any axis fell back to the practical range
};

//! Fixed-x kernel conditional-density estimate: a weighted Gaussian mixture
//! in y with one common scale,
//!   evaluate(y) = sum_i weight_i phi((y - center_i)/y_scale)/y_scale.
struct KernelCurve {
  std::vector<double> weights;
  std::vector<double> centers;
  double y_scale = 0;

  double evaluate(double y) const;
};

//! Candidate bandwidths, per_axis values geometrically spaced per direction
//! (the grid is the cross product). Under GridMode::strict the (CK) bounds
//! 1/h1 in [k_n, delta_hat n / (log n)^3], 1/h2 in [log^2 n, n] apply per
//! axis; an axis whose interval is empty falls back to [n^-0.9, 0.5] and the
//! grid is flagged relaxed.
BandwidthGrid build_bandwidth_grid(int n, double delta_hat, int per_axis = 10,
                                   GridMode mode = GridMode::practical);

//! The estimator at bandwidth h: weight_i = K_h1(x - X_i)/(n fhat_X(X_i)),
//! centers Y_i, y_scale h2. Denominators are clamped below at 1/n so weights
//! stay finite.
KernelCurve kernel_estimate(const ObservationSet& obs, const MarginalEstimate& fX,
                            Bandwidth2 h, double x);

//! K_h' smoothing of the h-estimate; by the Gaussian convolution closure this
//! is exactly kernel_estimate at h'' = (rss(h1,h1'), rss(h2,h2')).
KernelCurve double_smoothed_estimate(const ObservationSet& obs,
                                     const MarginalEstimate& fX, Bandwidth2 h,
                                     Bandwidth2 hp, double x);

//! Exact L2(dy) distance of two mixture curves via the Gaussian cross-term
//! identity int phi_s(y-u) phi_t(y-v) dy = phi_rss(s,t)(u-v).
double l2_distance_y(const KernelCurve& a, const KernelCurve& b);

//! Penalty sigma(h) = chi / sqrt(delta_hat n h1 h2),
//! chi = (1+eta)(1+||K||_1)||K||_2 for the bivariate Gaussian product kernel.
double sigma_kernel(Bandwidth2 h, double delta_hat, int n, double eta);

//! All pairwise selection distances dist[i][j] = || fhat_{h_j} - fhat_{h_i,h_j} ||
//! for grid pairs h_i, h_j (row = candidate under test, column = competitor).
//! Shared by gl_select_bandwidth and the eta-batched Monte Carlo runner; the
//! values are independent of eta.
std::vector<std::vector<double>> kernel_distance_matrix(
    const ObservationSet& obs, const MarginalEstimate& fX,
    const BandwidthGrid& grid, double x);

//! Goldenshluger-Lepski bandwidth selection: minimizes A(h) + sigma(h) with
//! A(h) = max_h' { dist(h,h') - sigma(h') }_+. Ties prefer the largest
//! h1*h2, then the largest h1, then the largest h2.
std::pair<KernelCurve, SelectionTrace> gl_select_bandwidth(
    const ObservationSet& obs, const MarginalEstimate& fX,
    const BandwidthGrid& grid, double x, double eta);

//! Selection from a precomputed distance matrix (the eta-dependent tail of
//! gl_select_bandwidth); index is the position in grid.pairs.
std::pair<std::size_t, SelectionTrace> gl_select_from_distances(
    const std::vector<std::vector<double>>& dist, const BandwidthGrid& grid,
    double eta);

} // namespace cdens
