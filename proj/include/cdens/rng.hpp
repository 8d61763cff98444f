#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

namespace cdens {

//! Philox4x32-10 counter-based generator.
//! Stateless: every 128-bit block is a pure function of (key, counter), so
//! draws are addressable by (seed, stream, index) and reproducible across
//! platforms and run orders.
struct Philox4x32 {
  static constexpr std::uint32_t M0 = 0xD2511F53u;
  static constexpr std::uint32_t M1 = 0xCD9E8D57u;
  static constexpr std::uint32_t W0 = 0x9E3779B9u;
  static constexpr std::uint32_t W1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key)
  {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += W0;
        key[1] += W1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
      const std::array<std::uint32_t, 4> next = {
        static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
        static_cast<std::uint32_t>(p1),
        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
        static_cast<std::uint32_t>(p0),
      };
      ctr = next;
    }
    return ctr;
  }

  //! Block addressed by (seed, stream, index): counter = (index, stream).
  static std::array<std::uint32_t, 4> block(std::uint64_t seed,
                                            std::uint64_t stream,
                                            std::uint64_t index)
  {
    const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
    };
    const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
    };
    return block(ctr, key);
  }
};

//! Addressable draws on top of Philox blocks. Each (stream, index) yields one
//! variate; both uniforms of a block are available so transforms needing two
//! (Box-Muller) still consume a single block.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  //! Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform(std::uint64_t stream, std::uint64_t index) const
  {
    const auto b = Philox4x32::block(seed_, stream, index);
    return to_unit(b[0], b[1]);
  }

  //! Both uniforms of one block, for transforms that need two.
  std::pair<double, double> uniform_pair(std::uint64_t stream,
                                         std::uint64_t index) const
  {
    const auto b = Philox4x32::block(seed_, stream, index);
    return { to_unit(b[0], b[1]), to_unit(b[2], b[3]) };
  }

  //! Standard normal via Box-Muller on the block's two uniforms.
  double normal(std::uint64_t stream, std::uint64_t index) const
  {
    const auto b = Philox4x32::block(seed_, stream, index);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi_ * u2);
  }

  //! Exponential with the given rate.
  double exponential(std::uint64_t stream, std::uint64_t index, double rate) const
  {
    const auto b = Philox4x32::block(seed_, stream, index);
    return -std::log(to_unit(b[0], b[1])) / rate;
  }

  //! Standard Cauchy.
  double cauchy(std::uint64_t stream, std::uint64_t index) const
  {
    const auto b = Philox4x32::block(seed_, stream, index);
    return std::tan(pi_ * (to_unit(b[0], b[1]) - 0.5));
  }

  std::uint64_t seed() const { return seed_; }

private:
  static double to_unit(std::uint32_t lo, std::uint32_t hi)
  {
    const std::uint64_t r = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
  }

  static constexpr double pi_ = 3.14159265358979323846;
  std::uint64_t seed_;
};

} // namespace cdens
