#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cdens {

enum class ExampleId { Ex1, Ex2, Ex3, Ex4 };

//! 2n draws from one simulation example: n (X, Y) pairs for estimating the
//! conditional density plus an independent X-only half of the same size for
//! the preliminary marginal estimator.
struct ObservationSet {
  std::vector<std::pair<double, double>> estimation_pairs;
  std::vector<double> marginal_xs;
  std::uint64_t seed = 0;
  ExampleId example = ExampleId::Ex1;
};

//! Draw the 2n observations of the given example. Deterministic: equal
//! (example, n, seed, ex1_cauchy) yields bit-identical data. ex1_cauchy
//! replaces Ex1's Gaussian noise by standard Cauchy noise (off by default).
ObservationSet generate(ExampleId example, int n, std::uint64_t seed,
                        bool ex1_cauchy = false);

//! Exact conditional density of Y given X = x.
//!   Ex1: N(2x^2+5, 1.3-|x|)            (variance; requires |x| < 1.3)
//!   Ex2: 0.75 N(0,(2+x)^2) + 0.25 * shifted Exp(2) on [2, inf)
//!   Ex3: N(x^2+1, 1.3+|x|)
//!   Ex4: same conditional law as Ex2
double true_conditional_density(ExampleId example, double x, double y,
                                bool ex1_cauchy = false);

//! Exact design density f_X. Ex1/Ex2: uniform on [0,1]; Ex3/Ex4: the mixture
//! 0.5 N(0, 1/81) + 0.5 N(1, 1/16).
double true_marginal_density(ExampleId example, double x);

//! Structure of the true conditional law at x, used by the risk quadrature:
//! an interval certain to carry all but ~1e-14 of the mass (component means
//! padded by 8 times the largest component sd), interior kink locations
//! (Ex2/Ex4's exponential onset), and the smallest smoothness scale.
struct TruthShape {
  double lo = 0;
  double hi = 0;
  std::vector<double> breakpoints;
  double min_scale = 0;
};

TruthShape true_conditional_shape(ExampleId example, double x,
                                  bool ex1_cauchy = false);

} // namespace cdens
