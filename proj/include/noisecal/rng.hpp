#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace noisecal {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The output is
/// a pure function of (counter, key), which makes draws reproducible under any
/// parallel schedule.
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Identifies one reproducible random stream: the seed is the Philox key and
/// the stream id occupies the upper half of the counter.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Derives an independent child stream. Children of distinct `index`
  /// values (or of distinct parents) do not overlap.
  [[nodiscard]] constexpr RngSeed substream(std::uint64_t index) const {
    return {seed, splitmix64(stream_id ^ splitmix64(index + 0x632BE59BD9B4E019ull))};
  }

  friend constexpr bool operator==(const RngSeed&, const RngSeed&) = default;
};

namespace detail {

constexpr double unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 32) | lo;
  // 53 random bits mapped onto (0, 1].
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

} // namespace detail

/// The pair of standard normals stored at positions 2·block and 2·block+1 of
/// the stream (Box–Muller on one Philox block).
inline std::array<double, 2> normal_pair(const RngSeed& rng, std::uint64_t block) {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(rng.stream_id),
                                static_cast<std::uint32_t>(rng.stream_id >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(rng.seed),
                            static_cast<std::uint32_t>(rng.seed >> 32)};
  const auto out = Philox4x32::generate(ctr, key);
  const double u1 = detail::unit_open_closed(out[0], out[1]);
  const double u2 = detail::unit_open_closed(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace noisecal
