#include <gtest/gtest.h>

#include <set>

#include "noisecal/rng.hpp"

using namespace noisecal;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                        {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, UsableAtCompileTime) {
  constexpr auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  static_assert(out[0] == 0x6627e8d5u);
  SUCCEED();
}

TEST(RngSeed, SubstreamsAreDeterministicAndDistinct) {
  const RngSeed root{42, 7};
  EXPECT_EQ(root.substream(3), root.substream(3));
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 1000; ++i) ids.insert(root.substream(i).stream_id);
  EXPECT_EQ(ids.size(), 1000u);
  EXPECT_NE(root.substream(0).stream_id, (RngSeed{42, 8}.substream(0).stream_id));
  EXPECT_EQ(root.substream(5).seed, 42u);
}

TEST(NormalPair, FiniteAndReproducible) {
  const RngSeed rng{1, 2};
  for (std::uint64_t b = 0; b < 10000; ++b) {
    const auto p = normal_pair(rng, b);
    ASSERT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
    ASSERT_EQ(p, normal_pair(rng, b));
  }
}
