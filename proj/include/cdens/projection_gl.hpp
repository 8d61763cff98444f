#pragma once

#include "cdens/marginal.hpp"
#include "cdens/sampling.hpp"
#include "cdens/trace.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace cdens {

//! Dyadic resolution pair: 2^{m1} x-cells on [x−2A, x+2A] and 2^{m2} y-cells
//! on the y-range B.
struct ModelIndex {
  int m1 = 0;
  int m2 = 0;
};

//! Geometry and polynomial degrees of the tensor basis. phi1/phi2 are the
//! pointwise bounds sum_j φ_j² ≤ phi1·D1 and sum_k ψ_k² ≤ phi2·D2.
struct BasisSpec {
  double A = 1.0;
  double x_center = 0.0;
  double b_lo = 0.0;
  double b_hi = 1.0;
  int r = 0;
  int r_y = 0;
  double phi1 = 0.25;
  double phi2 = 1.0;

  static BasisSpec make(double A, double x_center, double b_lo, double b_hi,
                        int r = 0, int r_y = 0);

  double b_width() const { return b_hi - b_lo; }
  int d1(int m1) const { return (r + 1) * (1 << m1); }
  int d2(int m2) const { return (r_y + 1) * (1 << m2); }
};

//! y-range chosen from the estimation sample: [min Y − 0.1·range,
//! max Y + 0.1·range], with a half-unit pad when the sample is degenerate.
BasisSpec data_driven_basis_spec(const ObservationSet& obs, double x,
                                 double A = 1.0, int r = 0, int r_y = 0);

//! φ_{l,d}(u) on the dyadic x-partition at resolution m1.
double legendre_basis_eval(const BasisSpec& spec, int m1, int l, int d,
                           double u);

//! ψ_{k,e}(y) on the dyadic y-partition of B at resolution m2.
double y_basis_eval(const BasisSpec& spec, int m2, int k, int e, double y);

//! One fitted model: the Gram block at the cell containing x, its solution
//! (or the zero block when the spectral safeguard trips), and the collapsed
//! y-section coefficients used for evaluation.
struct ProjectionFit {
  ModelIndex model;
  BasisSpec spec;
  double x = 0.0;
  int cell_index = 1;
  std::vector<double> coefficients; //!< (r+1) × D2, row-major.
  std::vector<double> y_coeffs;     //!< c_k = Σ_d Â_{d,k} φ_{l,d}(x), length D2.
  double gram_min_eig = 0.0;
  bool thresholded = false;

  double evaluate(double y) const;
};

ProjectionFit fit_projection(const ObservationSet& obs, ModelIndex m,
                             const BasisSpec& spec, double x, double delta_hat,
                             double eta);

//! σ(m) = χ̂·√(D1·D2/(δ̂·n)). With `simplified` (and r = 0) the penalty drops
//! the sup/δ̂ factor: χ̂ = (1+η)·√(4·phi1·phi2).
double sigma_projection(ModelIndex m, double delta_hat, double sup_hat, int n,
                        double eta, const BasisSpec& spec,
                        bool simplified = true);

//! Exact L2(dy) distance between two fitted sections at the point x, via the
//! common refinement of the two dyadic y-partitions.
double l2_distance_y_pp(const ProjectionFit& a, const ProjectionFit& b,
                        double x);

struct ModelGrid {
  std::vector<ModelIndex> models;
  int n = 0;
  double delta_hat = 0.0;
  bool relaxed = false;
};

enum class ModelGridMode { practical, strict_cm };

//! Dyadic models with D1, D2 inside the (CM) bounds (strict mode), falling
//! back per axis to D1 ∈ [1, n/4], D2 ∈ [2, n] when a bound pair is empty;
//! practical mode (the default) uses the relaxed bounds directly.
ModelGrid build_model_grid(int n, double delta_hat, const BasisSpec& spec,
                           ModelGridMode mode = ModelGridMode::practical);

//! GL model selection: A(m) = sup_{m'} [‖f̂_{m'} − f̂_{m'∧m}‖ − σ(m')]₊ and
//! m̂ = argmin A(m) + σ(m), ties toward smallest D1·D2 then lexicographic.
std::pair<ProjectionFit, SelectionTrace> gl_select_model(
    const ObservationSet& obs, const MarginalEstimate& fX,
    const ModelGrid& grid, const BasisSpec& spec, double x, double eta,
    bool simplified = true);

} // namespace cdens
