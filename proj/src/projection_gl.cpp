#include "cdens/projection_gl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cdens {

namespace {

std::string format_model(ModelIndex m)
{
  std::ostringstream os;
  os << "m=(" << m.m1 << "," << m.m2 << ")";
  return os.str();
}

double legendre_p(int d, double t)
{
  if (d == 0) return 1.0;
  double prev = 1.0, cur = t;
  for (int k = 1; k < d; ++k) {
    const double next = ((2 * k + 1) * t * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

//! Gauss–Legendre nodes/weights on [−1, 1] by Newton iteration on P_q.
void gauss_nodes(int q, std::vector<double>& nodes, std::vector<double>& weights)
{
  nodes.resize(static_cast<std::size_t>(q));
  weights.resize(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    double t = std::cos(3.14159265358979323846 * (i + 0.75) / (q + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double p = legendre_p(q, t);
      const double pm = legendre_p(q - 1, t);
      const double dp = q * (pm - t * p) / (1.0 - t * t);
      const double step = p / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const double pm = legendre_p(q - 1, t);
    const double dp = q * (pm - t * legendre_p(q, t)) / (1.0 - t * t);
    nodes[static_cast<std::size_t>(i)] = t;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  // Newton starts at descending cos; store ascending for deterministic sums.
  std::reverse(nodes.begin(), nodes.end());
  std::reverse(weights.begin(), weights.end());
}

int cell_of(double v, double lo, double width, int cells)
{
  const double offset = (v - lo) / width;
  if (offset < 0.0) return -1;
  const int k = static_cast<int>(offset);
  return k < cells ? k : -1;
}

//! Collapsed y-section coefficients c_k(x) = Σ_d Â_{d,k} φ_{l,d}(x).
std::vector<double> collapse_at(const ProjectionFit& fit, double x)
{
  const int nphi = fit.spec.r + 1;
  const int d2 = fit.spec.d2(fit.model.m2);
  std::vector<double> c(static_cast<std::size_t>(d2), 0.0);
  for (int d = 0; d < nphi; ++d) {
    const double phi =
        legendre_basis_eval(fit.spec, fit.model.m1, fit.cell_index, d, x);
    if (phi == 0.0) continue;
    for (int k = 0; k < d2; ++k)
      c[static_cast<std::size_t>(k)] +=
          fit.coefficients[static_cast<std::size_t>(d * d2 + k)] * phi;
  }
  return c;
}

//! Section value at y from collapsed coefficients.
double section_value(const BasisSpec& spec, int m2, const std::vector<double>& c,
                     double y)
{
  const int cells = 1 << m2;
  const double width = spec.b_width() / cells;
  const int k = cell_of(y, spec.b_lo, width, cells);
  if (k < 0) return 0.0;
  const double cell_lo = spec.b_lo + k * width;
  const double t = 2.0 * (y - cell_lo) / width - 1.0;
  const double scale = std::sqrt(static_cast<double>(cells) / spec.b_width());
  double acc = 0.0;
  for (int e = 0; e <= spec.r_y; ++e) {
    const double norm = scale * std::sqrt(2.0 * e + 1.0);
    acc += c[static_cast<std::size_t>(k * (spec.r_y + 1) + e)] * norm *
           legendre_p(e, t);
  }
  return acc;
}

} // namespace

BasisSpec BasisSpec::make(double A, double x_center, double b_lo, double b_hi,
                          int r, int r_y)
{
  if (A <= 0.0) throw std::invalid_argument("BasisSpec: A must be positive");
  if (!(b_hi > b_lo))
    throw std::invalid_argument("BasisSpec: empty y-range");
  if (r < 0 || r_y < 0)
    throw std::invalid_argument("BasisSpec: degrees must be nonnegative");
  BasisSpec spec;
  spec.A = A;
  spec.x_center = x_center;
  spec.b_lo = b_lo;
  spec.b_hi = b_hi;
  spec.r = r;
  spec.r_y = r_y;
  spec.phi1 = (r + 1) / (4.0 * A);
  spec.phi2 = (r_y + 1) / (b_hi - b_lo);
  return spec;
}

BasisSpec data_driven_basis_spec(const ObservationSet& obs, double x, double A,
                                 int r, int r_y)
{
  if (obs.estimation_pairs.empty())
    throw std::invalid_argument("data_driven_basis_spec: empty sample");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [xi, yi] : obs.estimation_pairs) {
    (void)xi;
    lo = std::min(lo, yi);
    hi = std::max(hi, yi);
  }
  const double range = hi - lo;
  const double pad = range > 0.0 ? 0.1 * range : 0.5;
  return BasisSpec::make(A, x, lo - pad, hi + pad, r, r_y);
}

double legendre_basis_eval(const BasisSpec& spec, int m1, int l, int d,
                           double u)
{
  if (m1 < 0 || m1 > 30)
    throw std::invalid_argument("legendre_basis_eval: m1 out of range");
  const int cells = 1 << m1;
  if (l < 1 || l > cells)
    throw std::invalid_argument("legendre_basis_eval: cell index out of range");
  if (d < 0 || d > spec.r)
    throw std::invalid_argument("legendre_basis_eval: degree out of range");
  const double lo = spec.x_center - 2.0 * spec.A;
  const double width = 4.0 * spec.A / cells;
  if (cell_of(u, lo, width, cells) != l - 1) return 0.0;
  const double cell_lo = lo + (l - 1) * width;
  const double t = 2.0 * (u - cell_lo) / width - 1.0;
  const double norm = std::sqrt(cells / (2.0 * spec.A)) *
                      std::sqrt((2.0 * d + 1.0) / 2.0);
  return norm * legendre_p(d, t);
}

double y_basis_eval(const BasisSpec& spec, int m2, int k, int e, double y)
{
  if (m2 < 0 || m2 > 30)
    throw std::invalid_argument("y_basis_eval: m2 out of range");
  const int cells = 1 << m2;
  if (k < 1 || k > cells)
    throw std::invalid_argument("y_basis_eval: cell index out of range");
  if (e < 0 || e > spec.r_y)
    throw std::invalid_argument("y_basis_eval: degree out of range");
  const double width = spec.b_width() / cells;
  if (cell_of(y, spec.b_lo, width, cells) != k - 1) return 0.0;
  const double cell_lo = spec.b_lo + (k - 1) * width;
  const double t = 2.0 * (y - cell_lo) / width - 1.0;
  const double norm = std::sqrt((2.0 * e + 1.0) * cells / spec.b_width());
  return norm * legendre_p(e, t);
}

double ProjectionFit::evaluate(double y) const
{
  return section_value(spec, model.m2, y_coeffs, y);
}

ProjectionFit fit_projection(const ObservationSet& obs, ModelIndex m,
                             const BasisSpec& spec, double x, double delta_hat,
                             double eta)
{
  if (m.m1 < 0 || m.m2 < 0 || m.m1 > 30 || m.m2 > 30)
    throw std::invalid_argument("fit_projection: model out of range");
  if (delta_hat <= 0.0)
    throw std::invalid_argument("fit_projection: delta_hat must be positive");
  if (eta <= -1.0)
    throw std::invalid_argument("fit_projection: eta must exceed -1");
  if (obs.estimation_pairs.empty())
    throw std::invalid_argument("fit_projection: empty sample");

  const int nphi = spec.r + 1;
  const int ycells = 1 << m.m2;
  const int npsi = spec.r_y + 1;
  const int d2 = spec.d2(m.m2);
  const int xcells = 1 << m.m1;
  const double xlo = spec.x_center - 2.0 * spec.A;
  const double xwidth = 4.0 * spec.A / xcells;
  const double ywidth = spec.b_width() / ycells;

  ProjectionFit fit;
  fit.model = m;
  fit.spec = spec;
  fit.x = x;
  const int lx = cell_of(x, xlo, xwidth, xcells);
  if (lx < 0)
    throw std::invalid_argument("fit_projection: x outside the basis domain");
  fit.cell_index = lx + 1;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nphi, nphi);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(nphi, d2);
  std::vector<double> phi(static_cast<std::size_t>(nphi));
  std::vector<double> psi(static_cast<std::size_t>(npsi));
  const std::size_t n = obs.estimation_pairs.size();
  const double cell_lo = xlo + lx * xwidth;
  const double xnorm_base = std::sqrt(xcells / (2.0 * spec.A));
  const double ynorm_base = std::sqrt(static_cast<double>(ycells) / spec.b_width());

  for (const auto& [xi, yi] : obs.estimation_pairs) {
    if (cell_of(xi, xlo, xwidth, xcells) != lx) continue;
    const double tx = 2.0 * (xi - cell_lo) / xwidth - 1.0;
    for (int d = 0; d < nphi; ++d)
      phi[static_cast<std::size_t>(d)] =
          xnorm_base * std::sqrt((2.0 * d + 1.0) / 2.0) * legendre_p(d, tx);
    for (int d = 0; d < nphi; ++d)
      for (int dp = 0; dp < nphi; ++dp)
        gram(d, dp) += phi[static_cast<std::size_t>(d)] *
                       phi[static_cast<std::size_t>(dp)];
    const int ky = cell_of(yi, spec.b_lo, ywidth, ycells);
    if (ky < 0) continue;
    const double ty = 2.0 * (yi - (spec.b_lo + ky * ywidth)) / ywidth - 1.0;
    for (int e = 0; e < npsi; ++e)
      psi[static_cast<std::size_t>(e)] =
          ynorm_base * std::sqrt(2.0 * e + 1.0) * legendre_p(e, ty);
    for (int d = 0; d < nphi; ++d)
      for (int e = 0; e < npsi; ++e)
        z(d, ky * npsi + e) +=
            phi[static_cast<std::size_t>(d)] * psi[static_cast<std::size_t>(e)];
  }
  gram /= static_cast<double>(n);
  z /= static_cast<double>(n);

  // Smallest eigenvalue: closed form for r ≤ 1, symmetric solver otherwise.
  double min_eig = 0.0;
  if (nphi == 1) {
    min_eig = gram(0, 0);
  } else if (nphi == 2) {
    const double a = gram(0, 0), b = gram(0, 1), c = gram(1, 1);
    min_eig = 0.5 * ((a + c) - std::sqrt((a - c) * (a - c) + 4.0 * b * b));
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                       Eigen::EigenvaluesOnly);
    min_eig = eig.eigenvalues().minCoeff();
  }
  fit.gram_min_eig = min_eig;

  const double threshold = std::pow(1.0 + eta, -0.4) * delta_hat;
  fit.coefficients.assign(static_cast<std::size_t>(nphi * d2), 0.0);
  if (min_eig > threshold) {
    const Eigen::MatrixXd coef = gram.llt().solve(z);
    for (int d = 0; d < nphi; ++d)
      for (int k = 0; k < d2; ++k)
        fit.coefficients[static_cast<std::size_t>(d * d2 + k)] = coef(d, k);
  } else {
    fit.thresholded = true;
  }
  fit.y_coeffs = collapse_at(fit, x);
  return fit;
}

double sigma_projection(ModelIndex m, double delta_hat, double sup_hat, int n,
                        double eta, const BasisSpec& spec, bool simplified)
{
  if (delta_hat <= 0.0 || sup_hat <= 0.0 || n <= 0)
    throw std::invalid_argument(
        "sigma_projection: delta_hat, sup_hat, n must be positive");
  if (eta <= -1.0)
    throw std::invalid_argument("sigma_projection: eta must exceed -1");
  double chi2 = 4.0 * spec.phi1 * spec.phi2;
  if (!(simplified && spec.r == 0)) chi2 *= (spec.r + 1) * sup_hat / delta_hat;
  const double chi = (1.0 + eta) * std::sqrt(chi2);
  const double d1 = spec.d1(m.m1), d2 = spec.d2(m.m2);
  return chi * std::sqrt(d1 * d2 / (delta_hat * static_cast<double>(n)));
}

double l2_distance_y_pp(const ProjectionFit& a, const ProjectionFit& b,
                        double x)
{
  if (a.spec.b_lo != b.spec.b_lo || a.spec.b_hi != b.spec.b_hi ||
      a.spec.r_y != b.spec.r_y)
    throw std::invalid_argument("l2_distance_y_pp: incompatible y-bases");
  const std::vector<double> ca = collapse_at(a, x);
  const std::vector<double> cb = collapse_at(b, x);
  const int mfine = std::max(a.model.m2, b.model.m2);
  const int cells = 1 << mfine;
  const double width = a.spec.b_width() / cells;
  const int q = a.spec.r_y + 1;
  std::vector<double> nodes, weights;
  gauss_nodes(q, nodes, weights);
  double acc = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double mid = a.spec.b_lo + (k + 0.5) * width;
    double cell_acc = 0.0;
    for (int j = 0; j < q; ++j) {
      const double y = mid + 0.5 * width * nodes[static_cast<std::size_t>(j)];
      const double diff = section_value(a.spec, a.model.m2, ca, y) -
                          section_value(b.spec, b.model.m2, cb, y);
      cell_acc += weights[static_cast<std::size_t>(j)] * diff * diff;
    }
    acc += cell_acc * 0.5 * width;
  }
  return std::sqrt(acc);
}

ModelGrid build_model_grid(int n, double delta_hat, const BasisSpec& spec,
                           ModelGridMode mode)
{
  if (n < 8) throw std::invalid_argument("build_model_grid: n must be >= 8");
  if (delta_hat <= 0.0)
    throw std::invalid_argument("build_model_grid: delta_hat must be positive");

  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  const double k_n = std::max(log_n, 1.0);

  // Dyadic m with lo ≤ (deg+1)·2^m ≤ hi.
  const auto axis = [](int deg, double lo, double hi) {
    std::vector<int> ms;
    for (int m = 0; m <= 30; ++m) {
      const double d = static_cast<double>(deg + 1) * (1 << m);
      if (d > hi) break;
      if (d >= lo) ms.push_back(m);
    }
    return ms;
  };

  std::vector<int> m1s, m2s;
  bool relaxed = mode == ModelGridMode::practical;
  if (mode == ModelGridMode::strict_cm) {
    m1s = axis(spec.r, k_n * (spec.r + 1), delta_hat * nd / (log_n * log_n * log_n));
    if (m1s.empty()) relaxed = true;
    m2s = axis(spec.r_y, log_n * log_n, nd);
    if (m2s.empty()) relaxed = true;
  }
  if (m1s.empty()) m1s = axis(spec.r, 1.0, nd / 4.0);
  if (m2s.empty()) m2s = axis(spec.r_y, 2.0, nd);
  if (m1s.empty() || m2s.empty())
    throw std::invalid_argument("build_model_grid: no admissible models");

  ModelGrid grid;
  grid.n = n;
  grid.delta_hat = delta_hat;
  grid.relaxed = relaxed;
  for (const int m1 : m1s)
    for (const int m2 : m2s) grid.models.push_back({ m1, m2 });
  return grid;
}

std::pair<ProjectionFit, SelectionTrace> gl_select_model(
    const ObservationSet& obs, const MarginalEstimate& fX,
    const ModelGrid& grid, const BasisSpec& spec, double x, double eta,
    bool simplified)
{
  const std::size_t p = grid.models.size();
  if (p == 0) throw std::invalid_argument("gl_select_model: empty grid");
  const int n = static_cast<int>(obs.estimation_pairs.size());

  std::deque<ProjectionFit> store; // deque: stable references across growth
  std::map<std::pair<int, int>, std::size_t> cache;
  const auto fit_of = [&](ModelIndex m) -> const ProjectionFit& {
    const auto key = std::make_pair(m.m1, m.m2);
    const auto it = cache.find(key);
    if (it != cache.end()) return store[it->second];
    store.push_back(fit_projection(obs, m, spec, x, fX.delta_hat, eta));
    cache.emplace(key, store.size() - 1);
    return store.back();
  };

  std::vector<double> sig(p);
  for (std::size_t j = 0; j < p; ++j)
    sig[j] = sigma_projection(grid.models[j], fX.delta_hat, fX.sup_hat, n, eta,
                              spec, simplified);

  // Pre-fit grid members in order so the store layout is deterministic.
  for (std::size_t j = 0; j < p; ++j) fit_of(grid.models[j]);

  // Distance cache keyed on (competitor model, meet model).
  std::map<std::pair<std::pair<int, int>, std::pair<int, int>>, double> dists;
  const auto dist_of = [&](ModelIndex mj, ModelIndex meet) {
    const auto key = std::make_pair(std::make_pair(mj.m1, mj.m2),
                                    std::make_pair(meet.m1, meet.m2));
    const auto it = dists.find(key);
    if (it != dists.end()) return it->second;
    const double d = l2_distance_y_pp(fit_of(mj), fit_of(meet), x);
    dists.emplace(key, d);
    return d;
  };

  SelectionTrace trace;
  std::size_t best = 0;
  double best_obj = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const ModelIndex mi = grid.models[i];
    double a = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const ModelIndex mj = grid.models[j];
      const ModelIndex meet{ std::min(mi.m1, mj.m1), std::min(mi.m2, mj.m2) };
      if (meet.m1 == mj.m1 && meet.m2 == mj.m2) continue; // distance is zero
      a = std::max(a, dist_of(mj, meet) - sig[j]);
    }
    const double obj = a + sig[i];
    trace.records.push_back({ format_model(mi), sig[i], a, obj });
    bool take = false;
    if (i == 0 || obj < best_obj) {
      take = true;
    } else if (obj == best_obj) {
      const ModelIndex mb = grid.models[best];
      const long pi_dim = static_cast<long>(spec.d1(mi.m1)) * spec.d2(mi.m2);
      const long pb_dim = static_cast<long>(spec.d1(mb.m1)) * spec.d2(mb.m2);
      if (pi_dim < pb_dim) take = true;
      else if (pi_dim == pb_dim &&
               (mi.m1 < mb.m1 || (mi.m1 == mb.m1 && mi.m2 < mb.m2)))
        take = true;
    }
    if (take) {
      best = i;
      best_obj = obj;
    }
  }
  trace.chosen = trace.records[best].id;
  return { fit_of(grid.models[best]), std::move(trace) };
}

} // namespace cdens
