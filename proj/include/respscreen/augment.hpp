#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "respscreen/audio_io.hpp"

namespace respscreen::augment {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct AugmentConfig {
  Range amp_range{1.15, 2.0};
  Range rate_range{0.8, 0.99};
  Range noise_snr_db_range{20.0, 40.0};
  int copies_per_method = 2;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError for unordered ranges or copies_per_method != 2.
  void validate() const;
};

enum class Method { kAmplify, kWhiteNoise, kPitchSpeed };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);

/// Multiplies by `factor` and hard-clips to [-1, 1].
AudioSegment amplify(const AudioSegment& seg, double factor);

/// Adds zero-mean Gaussian noise rescaled so that its empirical power sits at
/// exactly `snr_db` below the signal power. Clips to [-1, 1]. Throws
/// SilentSample for a zero-power input.
AudioSegment add_white_noise(const AudioSegment& seg, double snr_db, std::uint64_t seed);

/// Playback-rate change: duration becomes len/rate and every frequency scales
/// by `rate`.
AudioSegment pitch_speed(const AudioSegment& seg, double rate);

struct Provenance {
  Method method = Method::kAmplify;
  int copy_index = 0;
  double parameter = 0.0;  // factor, SNR in dB, or rate
  std::uint64_t seed = 0;
};

struct AugmentedCopy {
  AudioSegment audio;
  Provenance provenance;
};

/// Seed for one (sample, method, copy) draw; independent of processing order.
std::uint64_t copy_seed(std::uint64_t global_seed, std::string_view sample_id, Method method, int copy_index);

/// Two amplified, two noised and two rate-changed copies, in that order.
std::vector<AugmentedCopy> augment_six(const AudioSegment& seg, std::string_view sample_id, const AugmentConfig& cfg);

/// Identifier of an augmented copy, e.g. "s12#noise1".
std::string augmented_id(std::string_view parent_id, const Provenance& p);

}  // namespace respscreen::augment
