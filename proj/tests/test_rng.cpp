#include "doctest.h"

#include "cdens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using cdens::Philox4x32;
using cdens::Rng;

TEST_SUITE("rng")
{
  // Published known-answer vectors for philox4x32 with 10 rounds.
  TEST_CASE("philox known answers")
  {
    {
      const auto out = Philox4x32::block({ 0u, 0u, 0u, 0u }, { 0u, 0u });
      CHECK(out[0] == 0x6627e8d5u);
      CHECK(out[1] == 0xe169c58du);
      CHECK(out[2] == 0xbc57ac4cu);
      CHECK(out[3] == 0x9b00dbd8u);
    }
    {
      const auto out = Philox4x32::block(
          { 0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu },
          { 0xffffffffu, 0xffffffffu });
      CHECK(out[0] == 0x408f276du);
      CHECK(out[1] == 0x41c83b0eu);
      CHECK(out[2] == 0xa20bc7c6u);
      CHECK(out[3] == 0x6d5451fdu);
    }
    {
      const auto out = Philox4x32::block(
          { 0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u },
          { 0xa4093822u, 0x299f31d0u });
      CHECK(out[0] == 0xd16cfe09u);
      CHECK(out[1] == 0x94fdccebu);
      CHECK(out[2] == 0x5001e420u);
      CHECK(out[3] == 0x24126ea1u);
    }
  }

  TEST_CASE("seed stream index addressing matches the raw block")
  {
    const std::uint64_t seed = 0x0123456789abcdefull;
    const std::uint64_t stream = 0xfedcba9876543210ull;
    const std::uint64_t index = 0x1122334455667788ull;
    const auto direct = Philox4x32::block(
        { 0x55667788u, 0x11223344u, 0x76543210u, 0xfedcba98u },
        { 0x89abcdefu, 0x01234567u });
    const auto mapped = Philox4x32::block(seed, stream, index);
    CHECK(direct == mapped);
  }

  TEST_CASE("determinism and addressability")
  {
    const Rng a(42), b(42), c(43);
    CHECK(a.uniform(0, 7) == b.uniform(0, 7));
    CHECK(a.uniform(0, 7) != c.uniform(0, 7));
    CHECK(a.uniform(0, 7) != a.uniform(0, 8));
    CHECK(a.uniform(1, 7) != a.uniform(0, 7));
    const auto [u1, u2] = a.uniform_pair(3, 11);
    CHECK(u1 == a.uniform(3, 11));
    CHECK(u2 != u1);
  }

  TEST_CASE("uniform stays inside the open unit interval")
  {
    const Rng rng(7);
    for (std::uint64_t i = 0; i < 10000; ++i) {
      const double u = rng.uniform(0, i);
      CHECK(u > 0.0);
      CHECK(u < 1.0);
    }
  }

  TEST_CASE("uniform moments")
  {
    const Rng rng(20240401);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform(0, static_cast<std::uint64_t>(i));
      sum += u;
      sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  }

  TEST_CASE("normal moments")
  {
    const Rng rng(99);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal(0, static_cast<std::uint64_t>(i));
      sum += z;
      sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("exponential mean matches its rate")
  {
    const Rng rng(123);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      sum += rng.exponential(0, static_cast<std::uint64_t>(i), 2.0);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  }

  TEST_CASE("cauchy quartiles")
  {
    const Rng rng(321);
    const int n = 100000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i)
      draws[static_cast<std::size_t>(i)] =
          rng.cauchy(0, static_cast<std::uint64_t>(i));
    std::sort(draws.begin(), draws.end());
    const double median = draws[static_cast<std::size_t>(n / 2)];
    const double q3 = draws[static_cast<std::size_t>(3 * n / 4)];
    const double q1 = draws[static_cast<std::size_t>(n / 4)];
    CHECK(std::abs(median) < 0.02);
    CHECK(q3 == doctest::Approx(1.0).epsilon(0.05));
    CHECK(q1 == doctest::Approx(-1.0).epsilon(0.05));
  }
}
