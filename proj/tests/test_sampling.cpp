#include "doctest.h"

#include "cdens/sampling.hpp"
#include "test_util.hpp"

#include <cmath>
#include <stdexcept>

using namespace cdens;

namespace {

const double sqrt_2pi_t = std::sqrt(2.0 * std::acos(-1.0));

double phi(double y, double mean, double sd)
{
  const double z = (y - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * sqrt_2pi_t);
}

} // namespace

TEST_SUITE("sampling")
{
  TEST_CASE("conditional density point values")
  {
    // Ex1 at the conditional mean: 1 / sqrt(2 pi 0.8).
    const double ex1 = true_conditional_density(ExampleId::Ex1, 0.5, 5.5);
    CHECK(ex1 == doctest::Approx(1.0 / std::sqrt(2.0 * std::acos(-1.0) * 0.8))
                     .epsilon(1e-12));
    CHECK(ex1 == doctest::Approx(0.44603).epsilon(2e-5));

    // Ex2 at y = 0: only the centred normal component contributes.
    const double ex2 = true_conditional_density(ExampleId::Ex2, 0.5, 0.0);
    CHECK(ex2 == doctest::Approx(0.75 * phi(0.0, 0.0, 2.5)).epsilon(1e-12));
    CHECK(ex2 == doctest::Approx(0.11968).epsilon(2e-4));

    // Ex2 just past the exponential onset picks up the 0.5 exp(-2(y-2)) term.
    const double ex2_on = true_conditional_density(ExampleId::Ex2, 0.5, 2.0);
    CHECK(ex2_on ==
          doctest::Approx(0.75 * phi(2.0, 0.0, 2.5) + 0.5).epsilon(1e-12));
    CHECK(true_conditional_density(ExampleId::Ex2, 0.5, 1.999) <
          true_conditional_density(ExampleId::Ex2, 0.5, 2.0));

    // Ex4 shares Ex2's conditional law.
    CHECK(true_conditional_density(ExampleId::Ex4, 0.3, 1.7) ==
          true_conditional_density(ExampleId::Ex2, 0.3, 1.7));

    // Ex3 at x = 0, y at the mean.
    CHECK(true_conditional_density(ExampleId::Ex3, 0.0, 1.0) ==
          doctest::Approx(phi(1.0, 1.0, std::sqrt(1.3))).epsilon(1e-12));
  }

  TEST_CASE("marginal density values")
  {
    CHECK(true_marginal_density(ExampleId::Ex1, 0.25) == 1.0);
    CHECK(true_marginal_density(ExampleId::Ex1, -0.5) == 0.0);
    CHECK(true_marginal_density(ExampleId::Ex2, 1.5) == 0.0);
    const double f0 = true_marginal_density(ExampleId::Ex3, 0.0);
    CHECK(f0 == doctest::Approx(0.5 * phi(0.0, 0.0, 1.0 / 9.0) +
                                0.5 * phi(0.0, 1.0, 0.25))
                    .epsilon(1e-12));
    CHECK(f0 == doctest::Approx(1.7955).epsilon(1e-3));
    CHECK(true_marginal_density(ExampleId::Ex4, 0.7) ==
          true_marginal_density(ExampleId::Ex3, 0.7));
  }

  TEST_CASE("conditional densities integrate to one over their shape range")
  {
    struct Probe {
      ExampleId ex;
      double x;
    };
    const Probe probes[] = { { ExampleId::Ex1, 0.5 }, { ExampleId::Ex1, 0.0 },
                             { ExampleId::Ex2, 0.5 }, { ExampleId::Ex2, 0.0 },
                             { ExampleId::Ex3, 0.36 }, { ExampleId::Ex3, 1.0 },
                             { ExampleId::Ex4, 0.5 } };
    for (const auto& p : probes) {
      const TruthShape s = true_conditional_shape(p.ex, p.x);
      const double mass = simpson_segmented(
          [&](double y) { return true_conditional_density(p.ex, p.x, y); },
          s.lo, s.hi, s.breakpoints, 4000);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(s.lo < s.hi);
      CHECK(s.min_scale > 0.0);
    }
  }

  TEST_CASE("shape structure")
  {
    const TruthShape s2 = true_conditional_shape(ExampleId::Ex2, 0.5);
    REQUIRE(s2.breakpoints.size() == 1);
    CHECK(s2.breakpoints[0] == 2.0);
    CHECK(s2.min_scale == doctest::Approx(0.5));
    const TruthShape s1 = true_conditional_shape(ExampleId::Ex1, 0.5);
    CHECK(s1.breakpoints.empty());
    CHECK(s1.lo < 5.5);
    CHECK(s1.hi > 5.5);
    const TruthShape s1c = true_conditional_shape(ExampleId::Ex1, 0.5, true);
    CHECK(s1c.hi - s1c.lo > s1.hi - s1.lo); // heavy tails widen the range
  }

  TEST_CASE("Ex1 domain boundary")
  {
    CHECK_THROWS_AS((void)true_conditional_density(ExampleId::Ex1, 1.3, 5.0),
                    std::domain_error);
    CHECK_THROWS_AS((void)true_conditional_density(ExampleId::Ex1, -1.31, 5.0),
                    std::domain_error);
    CHECK_THROWS_AS((void)true_conditional_shape(ExampleId::Ex1, 1.3),
                    std::domain_error);
    CHECK_NOTHROW((void)true_conditional_density(ExampleId::Ex1, 1.29, 5.0));
  }

  TEST_CASE("generate is deterministic and validates n")
  {
    const auto a = generate(ExampleId::Ex2, 50, 7);
    const auto b = generate(ExampleId::Ex2, 50, 7);
    CHECK(a.estimation_pairs == b.estimation_pairs);
    CHECK(a.marginal_xs == b.marginal_xs);
    const auto c = generate(ExampleId::Ex2, 50, 8);
    CHECK(a.estimation_pairs != c.estimation_pairs);
    CHECK_THROWS_AS((void)generate(ExampleId::Ex1, 1, 7), std::invalid_argument);
    CHECK(a.estimation_pairs.size() == 50);
    CHECK(a.marginal_xs.size() == 50);
    // Prefix stability: the first n draws do not depend on n.
    const auto d = generate(ExampleId::Ex2, 20, 7);
    for (std::size_t i = 0; i < d.estimation_pairs.size(); ++i) {
      CHECK(d.estimation_pairs[i] == a.estimation_pairs[i]);
      CHECK(d.marginal_xs[i] == a.marginal_xs[i]);
    }
  }

  TEST_CASE("ex1_cauchy switches the noise but not the design")
  {
    const auto g = generate(ExampleId::Ex1, 100, 11, false);
    const auto h = generate(ExampleId::Ex1, 100, 11, true);
    bool any_y_differs = false;
    for (std::size_t i = 0; i < g.estimation_pairs.size(); ++i) {
      CHECK(g.estimation_pairs[i].first == h.estimation_pairs[i].first);
      if (g.estimation_pairs[i].second != h.estimation_pairs[i].second)
        any_y_differs = true;
    }
    CHECK(any_y_differs);
    CHECK(g.marginal_xs == h.marginal_xs);
  }

  TEST_CASE("empirical frequencies match the exact laws")
  {
    const int n = 50000;

    // Ex1: X uniform, so P(X in [0.45, 0.55]) = 0.1; E[Y] = 2/3 + 5.
    const auto g1 = generate(ExampleId::Ex1, n, 20250819);
    int in_bin = 0;
    double y_sum = 0.0;
    for (const auto& [x, y] : g1.estimation_pairs) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
      if (x >= 0.45 && x < 0.55) ++in_bin;
      y_sum += y;
    }
    CHECK(static_cast<double>(in_bin) / n == doctest::Approx(0.1).epsilon(0.1));
    CHECK(y_sum / n == doctest::Approx(2.0 / 3.0 + 5.0).epsilon(0.005));

    // Ex2: P(Y >= 2) = integral over x of 0.25 + 0.75 (1 - Phi(2/(2+x))).
    const auto g2 = generate(ExampleId::Ex2, n, 4);
    int tail = 0;
    for (const auto& [x, y] : g2.estimation_pairs)
      if (y >= 2.0) ++tail;
    const double tail_exact = simpson(
        [](double x) { return 0.25 + 0.75 * (1.0 - std_normal_cdf(2.0 / (2.0 + x))); },
        0.0, 1.0, 2000);
    CHECK(static_cast<double>(tail) / n ==
          doctest::Approx(tail_exact).epsilon(0.05));

    // Ex3: E[X] = 0.5 under the two-component design mixture, for both halves.
    const auto g3 = generate(ExampleId::Ex3, n, 5);
    double x_sum = 0.0, m_sum = 0.0;
    for (const auto& [x, y] : g3.estimation_pairs) x_sum += x;
    for (double x : g3.marginal_xs) m_sum += x;
    CHECK(x_sum / n == doctest::Approx(0.5).epsilon(0.03));
    CHECK(m_sum / n == doctest::Approx(0.5).epsilon(0.03));
    CHECK(g3.estimation_pairs[0].first != g3.marginal_xs[0]);
  }
}
