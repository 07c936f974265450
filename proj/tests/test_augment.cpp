#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "respscreen/augment.hpp"
#include "respscreen/errors.hpp"
#include "signals.hpp"

using namespace respscreen;
using namespace respscreen::augment;

TEST(Amplify, ScalesAndClips) {
  AudioSegment seg{{0.1, -0.2}, 22050};
  const auto out = amplify(seg, 2.0);
  EXPECT_DOUBLE_EQ(out.samples[0], 0.2);
  EXPECT_DOUBLE_EQ(out.samples[1], -0.4);
  EXPECT_EQ(amplify(AudioSegment{{0.9}, 22050}, 2.0).samples[0], 1.0);
  EXPECT_EQ(amplify(AudioSegment{{-0.9}, 22050}, 2.0).samples[0], -1.0);
  const auto zero = amplify(signals::silence(0.1), 1.15);
  for (double s : zero.samples) EXPECT_EQ(s, 0.0);
}

TEST(WhiteNoise, HitsRequestedSnr) {
  // 1e5 samples; amplitude chosen so no sample clips.
  const auto seg = signals::sine(440, 100000.0 / 22050.0, 22050, 0.7);
  double p_signal = 0.0;
  for (double s : seg.samples) p_signal += s * s;
  p_signal /= static_cast<double>(seg.size());
  for (double snr : {20.0, 30.0, 40.0}) {
    const auto out = add_white_noise(seg, snr, 77);
    double p_noise = 0.0;
    for (std::size_t i = 0; i < seg.size(); ++i) p_noise += (out.samples[i] - seg.samples[i]) * (out.samples[i] - seg.samples[i]);
    p_noise /= static_cast<double>(seg.size());
    EXPECT_NEAR(p_noise / p_signal, std::pow(10.0, -snr / 10.0), 0.12 * std::pow(10.0, -snr / 10.0));
    EXPECT_NEAR(10.0 * std::log10(p_signal / p_noise), snr, 0.5);
  }
}

TEST(WhiteNoise, FortyDbIsSubtleOnUnitSine) {
  const auto seg = signals::sine(440, 1.0, 22050, 1.0);
  const auto out = add_white_noise(seg, 40.0, 3);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < seg.size(); ++i) max_diff = std::max(max_diff, std::abs(out.samples[i] - seg.samples[i]));
  EXPECT_LT(max_diff, 0.05);
  EXPECT_GT(max_diff, 0.0);
}

TEST(WhiteNoise, SilentInputThrows) {
  EXPECT_THROW(add_white_noise(signals::silence(0.5), 30.0, 1), SilentSample);
}

TEST(WhiteNoise, DistinctSeedsDistinctNoise) {
  const auto seg = signals::sine(300, 0.2);
  int distinct = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = add_white_noise(seg, 25.0, s);
    const auto b = add_white_noise(seg, 25.0, s + 1000);
    double d = 0.0;
    for (std::size_t i = 0; i < seg.size(); ++i) d = std::max(d, std::abs(a.samples[i] - b.samples[i]));
    distinct += d > 0.0;
  }
  EXPECT_EQ(distinct, 20);
}

TEST(PitchSpeed, DurationScales) {
  const auto seg = signals::sine(500, 1.0);
  EXPECT_NEAR(static_cast<double>(pitch_speed(seg, 0.8).size()), 1.25 * 22050, 512);
  const double ratio = static_cast<double>(pitch_speed(seg, 0.99).size()) / static_cast<double>(seg.size());
  EXPECT_NEAR(ratio, 1.0 / 0.99, 0.002 / 0.99);
}

TEST(PitchSpeed, ToneShiftsByRateByDftOracle) {
  const auto seg = signals::sine(1000, 0.9);
  const auto out = pitch_speed(seg, 0.9);
  // 0.9 s / 0.9 = 1 s -> 1 Hz bins.
  ASSERT_EQ(out.size(), 22050u);
  const auto bin = oracle::argmax(oracle::dft_magnitudes(out.samples, 2000), 1);
  EXPECT_NEAR(static_cast<double>(bin), 900.0, 10.0);
}

TEST(AugmentSix, SixTaggedCopiesWithinRanges) {
  const auto seg = signals::chirp(300, 1200, 0.5, 22050, 0.6);
  AugmentConfig cfg;
  cfg.rng_seed = 42;
  const auto copies = augment_six(seg, "s1", cfg);
  ASSERT_EQ(copies.size(), 6u);
  std::set<std::string> ids;
  for (const auto& c : copies) {
    ids.insert(augmented_id("s1", c.provenance));
    for (double s : c.audio.samples) {
      ASSERT_TRUE(std::isfinite(s));
      ASSERT_LE(std::abs(s), 1.0);
    }
    switch (c.provenance.method) {
      case Method::kAmplify:
        EXPECT_GE(c.provenance.parameter, 1.15);
        EXPECT_LE(c.provenance.parameter, 2.0);
        break;
      case Method::kWhiteNoise:
        EXPECT_GE(c.provenance.parameter, 20.0);
        EXPECT_LE(c.provenance.parameter, 40.0);
        break;
      case Method::kPitchSpeed:
        EXPECT_GE(c.provenance.parameter, 0.8);
        EXPECT_LE(c.provenance.parameter, 0.99);
        break;
    }
  }
  EXPECT_EQ(ids.size(), 6u);
  EXPECT_EQ(copies[0].provenance.method, Method::kAmplify);
  EXPECT_EQ(copies[3].provenance.method, Method::kWhiteNoise);
  EXPECT_EQ(copies[5].provenance.method, Method::kPitchSpeed);
}

TEST(AugmentSix, DeterministicPerSeedAndSample) {
  const auto seg = signals::sine(700, 0.3);
  AugmentConfig cfg;
  cfg.rng_seed = 5;
  const auto a = augment_six(seg, "s9", cfg);
  const auto b = augment_six(seg, "s9", cfg);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a[i].audio.samples, b[i].audio.samples);
    EXPECT_EQ(a[i].provenance.parameter, b[i].provenance.parameter);
  }
  const auto other = augment_six(seg, "s10", cfg);
  EXPECT_NE(a[2].audio.samples, other[2].audio.samples);
  cfg.rng_seed = 6;
  EXPECT_NE(augment_six(seg, "s9", cfg)[0].provenance.parameter, a[0].provenance.parameter);
}

TEST(AugmentSix, RangeValidation) {
  AugmentConfig cfg;
  cfg.copies_per_method = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.amp_range = {2.0, 1.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
}
