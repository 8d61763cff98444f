#include "cdens/kernel_gl.hpp"

#include "cdens/math_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cdens {

namespace {

// Radius (in units of the Gaussian scale) beyond which exp_neg underflows to
// exactly 0; windows cut here lose nothing relative to full summation.
const double z_cut = std::sqrt(92.0);

std::string format_pair(Bandwidth2 h)
{
  std::ostringstream os;
  os.precision(6);
  os << "h=(" << h.h1 << "," << h.h2 << ")";
  return os.str();
}

//! Windowed dot of row `vals` against w[lo..hi), 4-way unrolled so the
//! summation order is fixed yet vectorizable.
double window_dot(const double* vals, const double* w, int m)
{
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int j = 0;
  for (; j + 4 <= m; j += 4) {
    s0 += vals[j] * w[j];
    s1 += vals[j + 1] * w[j + 1];
    s2 += vals[j + 2] * w[j + 2];
    s3 += vals[j + 3] * w[j + 3];
  }
  double tail = 0;
  for (; j < m; ++j) tail += vals[j] * w[j];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

//! Sum over i<j windows of u_i G_ij v_j for sorted centers: the quadratic
//! form sum_{i,j} u_i v_j phi_S(c_i - c_j) evaluated with two-pointer windows.
double cross_q(const std::vector<double>& cu, const std::vector<double>& u,
               const std::vector<double>& cv, const std::vector<double>& v,
               double S)
{
  const double radius = z_cut * S;
  const double inv_s = 1.0 / S;
  const double norm = 1.0 / (S * sqrt_2pi);
  double acc = 0.0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < cu.size(); ++i) {
    const double c = cu[i];
    while (lo < cv.size() && cv[lo] < c - radius) ++lo;
    if (hi < lo) hi = lo;
    while (hi < cv.size() && cv[hi] <= c + radius) ++hi;
    if (u[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double z = (c - cv[j]) * inv_s;
      row += exp_neg(-0.5 * z * z) * v[j];
    }
    acc += u[i] * row * norm;
  }
  return acc;
}

struct SortedCurve {
  std::vector<double> centers;
  std::vector<double> weights;
};

SortedCurve sorted_view(const KernelCurve& c)
{
  std::vector<std::size_t> idx(c.centers.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return c.centers[a] < c.centers[b]; });
  SortedCurve s;
  s.centers.reserve(idx.size());
  s.weights.reserve(idx.size());
  for (const std::size_t k : idx) {
    s.centers.push_back(c.centers[k]);
    s.weights.push_back(c.weights[k]);
  }
  return s;
}

//! Banded Gram of phi_S over a sorted center vector; rows cover the window
//! where phi_S is not identically zero.
struct BandedGram {
  int n = 0;
  std::vector<int> lo;
  std::vector<std::size_t> off;
  std::vector<double> vals;

  void build(const std::vector<double>& ys, double S)
  {
    n = static_cast<int>(ys.size());
    lo.assign(static_cast<std::size_t>(n), 0);
    off.assign(static_cast<std::size_t>(n) + 1, 0);
    const double radius = z_cut * S;
    const double inv_s = 1.0 / S;
    const double norm = 1.0 / (S * sqrt_2pi);
    std::size_t total = 0;
    int wlo = 0, whi = 0;
    std::vector<int> hi_row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double c = ys[static_cast<std::size_t>(i)];
      while (wlo < n && ys[static_cast<std::size_t>(wlo)] < c - radius) ++wlo;
      if (whi < wlo) whi = wlo;
      while (whi < n && ys[static_cast<std::size_t>(whi)] <= c + radius) ++whi;
      lo[static_cast<std::size_t>(i)] = wlo;
      hi_row[static_cast<std::size_t>(i)] = whi;
      off[static_cast<std::size_t>(i)] = total;
      total += static_cast<std::size_t>(whi - wlo);
    }
    off[static_cast<std::size_t>(n)] = total;
    vals.resize(total);
    for (int i = 0; i < n; ++i) {
      const double c = ys[static_cast<std::size_t>(i)];
      double* row = vals.data() + off[static_cast<std::size_t>(i)];
      const int jlo = lo[static_cast<std::size_t>(i)];
      const int m = hi_row[static_cast<std::size_t>(i)] - jlo;
      const double* yrow = ys.data() + jlo;
      for (int j = 0; j < m; ++j) {
        const double z = (c - yrow[j]) * inv_s;
        row[j] = exp_neg(-0.5 * z * z) * norm;
      }
    }
  }

  double form(const std::vector<double>& w) const
  {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (w[static_cast<std::size_t>(i)] == 0.0) continue;
      const int jlo = lo[static_cast<std::size_t>(i)];
      const int m = static_cast<int>(off[static_cast<std::size_t>(i) + 1] -
                                     off[static_cast<std::size_t>(i)]);
      acc += w[static_cast<std::size_t>(i)] *
             window_dot(vals.data() + off[static_cast<std::size_t>(i)],
                        w.data() + jlo, m);
    }
    return acc;
  }

  void matvec(const std::vector<double>& w, std::vector<double>& t) const
  {
    t.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int jlo = lo[static_cast<std::size_t>(i)];
      const int m = static_cast<int>(off[static_cast<std::size_t>(i) + 1] -
                                     off[static_cast<std::size_t>(i)]);
      t[static_cast<std::size_t>(i)] =
          window_dot(vals.data() + off[static_cast<std::size_t>(i)],
                     w.data() + jlo, m);
    }
  }
};

double dot(const std::vector<double>& u, const std::vector<double>& v)
{
  return window_dot(u.data(), v.data(), static_cast<int>(u.size()));
}

double rss(double a, double b) { return std::sqrt(a * a + b * b); }

std::vector<double> sorted_unique(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t index_of(const std::vector<double>& sorted, double v)
{
  return static_cast<std::size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

} // namespace

double KernelCurve::evaluate(double y) const
{
  const double inv_s = 1.0 / y_scale;
  double acc = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double z = (y - centers[i]) * inv_s;
    acc += weights[i] * exp_neg(-0.5 * z * z);
  }
  return acc * inv_s / sqrt_2pi;
}

BandwidthGrid build_bandwidth_grid(int n, double delta_hat, int per_axis,
                                   GridMode mode)
{
  if (n < 8) throw std::invalid_argument("build_bandwidth_grid: n must be >= 8");
  if (per_axis < 1)
    throw std::invalid_argument("build_bandwidth_grid: per_axis must be >= 1");
  if (delta_hat <= 0.0)
    throw std::invalid_argument("build_bandwidth_grid: delta_hat must be positive");

  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  const double practical_lo = std::pow(nd, -0.9);
  const double practical_hi = 0.5;

  double lo1 = practical_lo, hi1 = practical_hi;
  double lo2 = practical_lo, hi2 = practical_hi;
  bool relaxed = mode == GridMode::practical;
  if (mode == GridMode::strict) {
    // (CK) x-axis: 1/h1 in [k_n, delta_hat n / (log n)^3].
    const double inv_lo = std::max(log_n, 1.0);
    const double inv_hi = delta_hat * nd / (log_n * log_n * log_n);
    if (inv_lo <= inv_hi) {
      lo1 = 1.0 / inv_hi;
      hi1 = 1.0 / inv_lo;
    } else {
      relaxed = true;
    }
    // (CK) y-axis: 1/h2 in [log^2 n, n].
    const double inv2_lo = log_n * log_n;
    const double inv2_hi = nd;
    if (inv2_lo <= inv2_hi) {
      lo2 = 1.0 / inv2_hi;
      hi2 = 1.0 / inv2_lo;
    } else {
      relaxed = true;
    }
  }

  const auto axis = [per_axis](double lo, double hi) {
    std::vector<double> v(static_cast<std::size_t>(per_axis));
    if (per_axis == 1) {
      v[0] = std::sqrt(lo * hi);
      return v;
    }
    const double step = std::log(hi / lo) / (per_axis - 1);
    for (int k = 0; k < per_axis; ++k)
      v[static_cast<std::size_t>(k)] = lo * std::exp(step * k);
    return v;
  };

  BandwidthGrid grid;
  grid.n = n;
  grid.delta_hat = delta_hat;
  grid.relaxed = relaxed;
  for (const double h1 : axis(lo1, hi1))
    for (const double h2 : axis(lo2, hi2)) grid.pairs.push_back({ h1, h2 });
  return grid;
}

KernelCurve kernel_estimate(const ObservationSet& obs, const MarginalEstimate& fX,
                            Bandwidth2 h, double x)
{
  if (h.h1 <= 0.0 || h.h2 <= 0.0)
    throw std::invalid_argument("kernel_estimate: bandwidths must be positive");
  const std::size_t n = obs.estimation_pairs.size();
  const double floor = 1.0 / static_cast<double>(n);
  KernelCurve curve;
  curve.y_scale = h.h2;
  curve.weights.reserve(n);
  curve.centers.reserve(n);
  const double inv_h1 = 1.0 / h.h1;
  for (const auto& [xi, yi] : obs.estimation_pairs) {
    const double z = (x - xi) * inv_h1;
    const double kx = exp_neg(-0.5 * z * z) * inv_h1 / sqrt_2pi;
    const double denom = std::max(fX.evaluate(xi), floor);
    curve.weights.push_back(kx / (static_cast<double>(n) * denom));
    curve.centers.push_back(yi);
  }
  return curve;
}

KernelCurve double_smoothed_estimate(const ObservationSet& obs,
                                     const MarginalEstimate& fX, Bandwidth2 h,
                                     Bandwidth2 hp, double x)
{
  return kernel_estimate(obs, fX, { rss(h.h1, hp.h1), rss(h.h2, hp.h2) }, x);
}

double l2_distance_y(const KernelCurve& a, const KernelCurve& b)
{
  const SortedCurve sa = sorted_view(a);
  const SortedCurve sb = sorted_view(b);
  double q = 0.0;
  if (!sa.centers.empty())
    q += cross_q(sa.centers, sa.weights, sa.centers, sa.weights,
                 std::sqrt(2.0) * a.y_scale);
  if (!sb.centers.empty())
    q += cross_q(sb.centers, sb.weights, sb.centers, sb.weights,
                 std::sqrt(2.0) * b.y_scale);
  if (!sa.centers.empty() && !sb.centers.empty())
    q -= 2.0 * cross_q(sa.centers, sa.weights, sb.centers, sb.weights,
                       rss(a.y_scale, b.y_scale));
  return std::sqrt(std::max(q, 0.0));
}

double sigma_kernel(Bandwidth2 h, double delta_hat, int n, double eta)
{
  if (h.h1 <= 0.0 || h.h2 <= 0.0 || delta_hat <= 0.0 || n <= 0)
    throw std::invalid_argument("sigma_kernel: h, delta_hat, n must be positive");
  if (eta <= -1.0)
    throw std::invalid_argument("sigma_kernel: eta must exceed -1");
  const double chi = (1.0 + eta) * (1.0 + gauss_l1) * gauss_l2_2d;
  return chi / std::sqrt(delta_hat * static_cast<double>(n) * h.h1 * h.h2);
}

std::vector<std::vector<double>> kernel_distance_matrix(
    const ObservationSet& obs, const MarginalEstimate& fX,
    const BandwidthGrid& grid, double x)
{
  const std::size_t n = obs.estimation_pairs.size();
  const std::size_t p = grid.pairs.size();
  if (p == 0) throw std::invalid_argument("kernel_distance_matrix: empty grid");

  // Sorted-by-Y data with precomputed 1/(n fhat_X(X_i)) factors.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return obs.estimation_pairs[a].second < obs.estimation_pairs[b].second;
  });
  std::vector<double> ys(n), xs(n), invf(n);
  const double floor = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& [xi, yi] = obs.estimation_pairs[idx[k]];
    ys[k] = yi;
    xs[k] = xi;
    invf[k] = 1.0 / (static_cast<double>(n) * std::max(fX.evaluate(xi), floor));
  }

  const auto h1_of = [&](std::size_t q) { return grid.pairs[q].h1; };
  const auto h2_of = [&](std::size_t q) { return grid.pairs[q].h2; };
  std::vector<double> H1, H2;
  for (std::size_t q = 0; q < p; ++q) {
    H1.push_back(h1_of(q));
    H2.push_back(h2_of(q));
  }
  H1 = sorted_unique(H1);
  H2 = sorted_unique(H2);
  const std::size_t n1 = H1.size(), n2 = H2.size();

  // Double-smoothed scale sets per axis.
  std::vector<double> D1, D2;
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = a; b < n1; ++b) D1.push_back(rss(H1[a], H1[b]));
  for (std::size_t a = 0; a < n2; ++a)
    for (std::size_t b = a; b < n2; ++b) D2.push_back(rss(H2[a], H2[b]));
  D1 = sorted_unique(D1);
  D2 = sorted_unique(D2);

  // x-direction weight vectors for every needed scale (singles and doubles).
  const auto weight_vec = [&](double s) {
    std::vector<double> w(n);
    const double inv_s = 1.0 / s;
    const double norm = inv_s / sqrt_2pi;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = (x - xs[k]) * inv_s;
      w[k] = exp_neg(-0.5 * z * z) * norm * invf[k];
    }
    return w;
  };
  std::vector<std::vector<double>> w_single(n1), w_double(D1.size());
  for (std::size_t a = 0; a < n1; ++a) w_single[a] = weight_vec(H1[a]);
  for (std::size_t a = 0; a < D1.size(); ++a) w_double[a] = weight_vec(D1[a]);

  BandedGram gram;

  // Qaa[a1][a2] = || fhat_{(H1[a1], H2[a2])} ||^2.
  std::vector<std::vector<double>> qaa(n1, std::vector<double>(n2));
  for (std::size_t a2 = 0; a2 < n2; ++a2) {
    gram.build(ys, std::sqrt(2.0) * H2[a2]);
    for (std::size_t a1 = 0; a1 < n1; ++a1)
      qaa[a1][a2] = gram.form(w_single[a1]);
  }

  // Qbb[b1][b2] = || fhat at double-smoothed scales (D1[b1], D2[b2]) ||^2.
  std::vector<std::vector<double>> qbb(D1.size(), std::vector<double>(D2.size()));
  for (std::size_t b2 = 0; b2 < D2.size(); ++b2) {
    gram.build(ys, std::sqrt(2.0) * D2[b2]);
    for (std::size_t b1 = 0; b1 < D1.size(); ++b1)
      qbb[b1][b2] = gram.form(w_double[b1]);
  }

  // Qab for competitor h' = (H1[j1], H2[j2]) against the double-smoothed
  // curve at (rss(H1[i1], H1[j1]), rss(H2[i2], H2[j2])): the y-cross scale
  // sqrt(H2[j2]^2 + H2[i2]^2 + H2[j2]^2) depends on (j2, i2) only, so one
  // banded Gram serves all h1 combinations.
  std::vector<std::vector<double>> dist(p, std::vector<double>(p, 0.0));
  std::vector<std::vector<double>> t(D1.size());
  std::vector<std::size_t> i1_of(p), i2_of(p);
  std::vector<std::vector<std::size_t>> pairs_at_h2(n2);
  for (std::size_t q = 0; q < p; ++q) {
    i1_of[q] = index_of(H1, h1_of(q));
    i2_of[q] = index_of(H2, h2_of(q));
    pairs_at_h2[i2_of[q]].push_back(q);
  }
  std::vector<std::vector<double>> qab(n1, std::vector<double>(n1));
  for (std::size_t j2 = 0; j2 < n2; ++j2) {
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      const double cross_scale =
          std::sqrt(2.0 * H2[j2] * H2[j2] + H2[i2] * H2[i2]);
      gram.build(ys, cross_scale);
      for (std::size_t b1 = 0; b1 < D1.size(); ++b1)
        gram.matvec(w_double[b1], t[b1]);
      for (std::size_t j1 = 0; j1 < n1; ++j1)
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
          const std::size_t b1 = index_of(D1, rss(H1[i1], H1[j1]));
          qab[j1][i1] = dot(w_single[j1], t[b1]);
        }
      const std::size_t b2 = index_of(D2, rss(H2[i2], H2[j2]));
      for (const std::size_t qi : pairs_at_h2[i2])
        for (const std::size_t qj : pairs_at_h2[j2]) {
          const std::size_t i1 = i1_of[qi], j1 = i1_of[qj];
          const std::size_t b1 = index_of(D1, rss(H1[i1], H1[j1]));
          const double d2 = qaa[j1][j2] + qbb[b1][b2] - 2.0 * qab[j1][i1];
          dist[qi][qj] = std::sqrt(std::max(d2, 0.0));
        }
    }
  }
  return dist;
}

std::pair<std::size_t, SelectionTrace> gl_select_from_distances(
    const std::vector<std::vector<double>>& dist, const BandwidthGrid& grid,
    double eta)
{
  const std::size_t p = grid.pairs.size();
  if (p == 0 || dist.size() != p)
    throw std::invalid_argument("gl_select_from_distances: grid/distance mismatch");

  std::vector<double> sig(p);
  for (std::size_t j = 0; j < p; ++j)
    sig[j] = sigma_kernel(grid.pairs[j], grid.delta_hat, grid.n, eta);

  SelectionTrace trace;
  std::size_t best = 0;
  double best_obj = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      a = std::max(a, dist[i][j] - sig[j]);
    const double obj = a + sig[i];
    trace.records.push_back({ format_pair(grid.pairs[i]), sig[i], a, obj });
    bool take = false;
    if (i == 0 || obj < best_obj) {
      take = true;
    } else if (obj == best_obj) {
      const double pi_prod = grid.pairs[i].h1 * grid.pairs[i].h2;
      const double pb_prod = grid.pairs[best].h1 * grid.pairs[best].h2;
      if (pi_prod > pb_prod) take = true;
      else if (pi_prod == pb_prod) {
        if (grid.pairs[i].h1 > grid.pairs[best].h1) take = true;
        else if (grid.pairs[i].h1 == grid.pairs[best].h1 &&
                 grid.pairs[i].h2 > grid.pairs[best].h2)
          take = true;
      }
    }
    if (take) {
      best = i;
      best_obj = obj;
    }
  }
  trace.chosen = trace.records[best].id;
  return { best, trace };
}

std::pair<KernelCurve, SelectionTrace> gl_select_bandwidth(
    const ObservationSet& obs, const MarginalEstimate& fX,
    const BandwidthGrid& grid, double x, double eta)
{
  const auto dist = kernel_distance_matrix(obs, fX, grid, x);
  auto [best, trace] = gl_select_from_distances(dist, grid, eta);
  return { kernel_estimate(obs, fX, grid.pairs[best], x), std::move(trace) };
}

} // namespace cdens
