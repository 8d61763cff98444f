#include "doctest.h"

#include "cdens/marginal.hpp"
#include "cdens/sampling.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace cdens;

namespace {

// Independent constants for the penalty oracle.
const double gauss_l1_t = 1.0;
const double gauss_l2_1d_t = 1.0 / std::sqrt(2.0 * std::sqrt(std::acos(-1.0)));

double pen_oracle(int n, double h, double pilot, double c)
{
  return c * gauss_l2_1d_t * (1.0 + gauss_l1_t) *
         std::sqrt(std::abs(std::log(h)) * pilot / (n * h));
}

} // namespace

TEST_SUITE("marginal")
{
  TEST_CASE("rule of thumb on fixed vectors")
  {
    // {1..5}: sd = sqrt(2.5), IQR = 4 - 2 = 2, spread = 2/1.34 < sd.
    const std::vector<double> a{ 1, 2, 3, 4, 5 };
    CHECK(rule_of_thumb_bandwidth(a) ==
          doctest::Approx(1.06 * (2.0 / 1.34) * std::pow(5.0, -0.2))
              .epsilon(1e-12));

    // {1..4}: interpolated quartiles 1.75 / 3.25, IQR = 1.5.
    const std::vector<double> b{ 4, 2, 1, 3 }; // unsorted on purpose
    CHECK(rule_of_thumb_bandwidth(b) ==
          doctest::Approx(1.06 * (1.5 / 1.34) * std::pow(4.0, -0.2))
              .epsilon(1e-12));

    // Scale equivariance.
    std::vector<double> a3(a);
    for (double& v : a3) v *= 3.0;
    CHECK(rule_of_thumb_bandwidth(a3) ==
          doctest::Approx(3.0 * rule_of_thumb_bandwidth(a)).epsilon(1e-12));

    CHECK_THROWS_AS((void)rule_of_thumb_bandwidth({ 1.0 }), std::invalid_argument);
    CHECK_THROWS_AS((void)rule_of_thumb_bandwidth({ 2.0, 2.0, 2.0 }),
                    std::runtime_error);
  }

  TEST_CASE("rule of thumb magnitude on uniform designs")
  {
    const auto g4 = generate(ExampleId::Ex1, 10000, 20250819);
    const double h4 = rule_of_thumb_bandwidth(g4.marginal_xs);
    CHECK(h4 == doctest::Approx(0.0485).epsilon(0.07));

    const auto g3 = generate(ExampleId::Ex1, 1000, 20250819);
    const double h3 = rule_of_thumb_bandwidth(g3.marginal_xs);
    CHECK(h3 == doctest::Approx(0.0769).epsilon(0.09));
  }

  TEST_CASE("penalty formula")
  {
    CHECK(marginal_pen(1000, 0.0771, 1.0) ==
          doctest::Approx(pen_oracle(1000, 0.0771, 1.0, 2.2)).epsilon(1e-12));
    CHECK(marginal_pen(1000, 0.0771, 1.0) == doctest::Approx(0.4261).epsilon(1e-3));
    CHECK(marginal_pen(1000, 1.0, 1.0) == 0.0);    // |log 1| = 0
    CHECK(marginal_pen(1000, 0.1, -0.5) == 0.0);   // pilot clamped at 0
    CHECK(marginal_pen(500, 0.05, 2.0, 1.0) ==
          doctest::Approx(pen_oracle(500, 0.05, 2.0, 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS((void)marginal_pen(0, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)marginal_pen(100, 0.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("config helpers")
  {
    const MarginalConfig cfg;
    CHECK(cfg.k_n(1000) == doctest::Approx(std::log(1000.0)).epsilon(1e-15));
    CHECK(cfg.k_n(2) == 1.0); // clamped at 1
    CHECK(cfg.floor_for(250) == doctest::Approx(0.004).epsilon(1e-15));
    MarginalConfig with_floor;
    with_floor.delta_floor = 0.05;
    CHECK(with_floor.floor_for(250) == 0.05);
  }

  TEST_CASE("selection on a uniform design")
  {
    const auto g = generate(ExampleId::Ex1, 1000, 20250819);
    const MarginalEstimate est = gl_select_marginal(g.marginal_xs, 0.5);

    const double h_rot = rule_of_thumb_bandwidth(g.marginal_xs);
    CHECK(est.selected_bandwidth_h0 >= h_rot / 4.0 * (1 - 1e-12));
    CHECK(est.selected_bandwidth_h0 <= 4.0 * h_rot * (1 + 1e-12));

    CHECK(est.evaluate(0.5) == doctest::Approx(1.0).epsilon(0.15));
    CHECK(est.delta_hat > 0.2);
    CHECK(est.sup_hat >= est.delta_hat);
    CHECK(est.sup_hat < 2.0);

    REQUIRE(est.trace.records.size() == 10);
    double best = est.trace.records[0].objective;
    for (const auto& r : est.trace.records) {
      CHECK(r.a_value >= 0.0);
      CHECK(r.objective == r.a_value + r.sigma);
      best = std::min(best, r.objective);
    }
    bool found = false;
    for (const auto& r : est.trace.records)
      if (r.id == est.trace.chosen) {
        found = true;
        CHECK(r.objective == best);
      }
    CHECK(found);
  }

  TEST_CASE("single-bandwidth grid selects trivially")
  {
    const auto g = generate(ExampleId::Ex1, 1000, 20250820);
    MarginalConfig cfg;
    cfg.grid_size = 1;
    const MarginalEstimate est = gl_select_marginal(g.marginal_xs, 0.5, cfg);
    REQUIRE(est.trace.records.size() == 1);
    CHECK(est.trace.chosen == est.trace.records[0].id);
    CHECK(est.selected_bandwidth_h0 ==
          doctest::Approx(rule_of_thumb_bandwidth(g.marginal_xs)).epsilon(1e-12));
    // On this well-behaved sample the penalty dominates the single
    // self-comparison, so A = 0.
    CHECK(est.trace.records[0].a_value == 0.0);
  }

  TEST_CASE("delta floor engages far from the data")
  {
    const auto g = generate(ExampleId::Ex1, 1000, 3);
    const MarginalEstimate est = gl_select_marginal(g.marginal_xs, 50.0);
    CHECK(est.delta_hat == doctest::Approx(1.0 / 1000.0).epsilon(1e-15));
    CHECK(est.sup_hat == est.delta_hat);
  }

  TEST_CASE("selection is deterministic")
  {
    const auto g = generate(ExampleId::Ex3, 400, 17);
    const MarginalEstimate a = gl_select_marginal(g.marginal_xs, 0.36);
    const MarginalEstimate b = gl_select_marginal(g.marginal_xs, 0.36);
    CHECK(a.selected_bandwidth_h0 == b.selected_bandwidth_h0);
    CHECK(a.delta_hat == b.delta_hat);
    CHECK(a.sup_hat == b.sup_hat);
    CHECK(a.evaluate(0.1) == b.evaluate(0.1));
  }

  TEST_CASE("oracle marginal wraps the exact density")
  {
    const MarginalConfig cfg;
    const MarginalEstimate est = oracle_marginal(ExampleId::Ex1, 0.5, cfg, 1000);
    // V_n(0.5) = [0.5 - 2/log(1000), 0.5 + 2/log(1000)] stays inside [0, 1],
    // where the true density is exactly 1.
    CHECK(est.delta_hat == 1.0);
    CHECK(est.sup_hat == 1.0);
    CHECK(est.evaluate(0.25) == 1.0);
    CHECK(est.evaluate(-1.0) == 0.0);
    CHECK(est.trace.chosen == "oracle");
    CHECK(est.trace.records.empty());
    CHECK(est.selected_bandwidth_h0 == 0.0);

    // Ex3 at x = 0: recompute the neighborhood extrema independently.
    const MarginalEstimate e3 = oracle_marginal(ExampleId::Ex3, 0.0, cfg, 1000);
    const double half = 2.0 / std::log(1000.0);
    double mn = true_marginal_density(ExampleId::Ex3, -half);
    double mx = mn;
    for (int k = 1; k < 21; ++k) {
      const double t = -half + 2.0 * half * k / 20.0;
      const double v = true_marginal_density(ExampleId::Ex3, t);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    CHECK(e3.delta_hat == doctest::Approx(std::max(mn, 1e-3)).epsilon(1e-12));
    CHECK(e3.sup_hat == doctest::Approx(mx).epsilon(1e-12));
    CHECK(e3.sup_hat == doctest::Approx(true_marginal_density(ExampleId::Ex3, 0.0))
                            .epsilon(1e-12));
    CHECK(e3.delta_hat < e3.sup_hat);

    // Far outside the design the floor engages.
    const MarginalEstimate far = oracle_marginal(ExampleId::Ex1, 50.0, cfg, 250);
    CHECK(far.delta_hat == doctest::Approx(0.004).epsilon(1e-15));
  }
}
