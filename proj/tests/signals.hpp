#pragma once

// Synthetic test signals.

#include <cmath>
#include <numbers>
#include <vector>

#include "respscreen/audio_io.hpp"
#include "respscreen/rng.hpp"

namespace signals {

using respscreen::AudioSegment;

inline AudioSegment sine(double hz, double seconds, int sr = 22050, double amp = 0.5, double phase = 0.0) {
  AudioSegment s;
  s.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr + phase);
  return s;
}

inline AudioSegment chirp(double f0, double f1, double seconds, int sr = 22050, double amp = 0.5) {
  AudioSegment s;
  s.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  s.samples.resize(n);
  const double k = (f1 - f0) / seconds;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * k * t * t));
  }
  return s;
}

/// White noise with a sinusoidal amplitude envelope at `mod_hz`.
inline AudioSegment am_noise(double mod_hz, double seconds, std::uint64_t seed, int sr = 22050) {
  respscreen::Rng rng(seed);
  AudioSegment s;
  s.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double env = 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * mod_hz * static_cast<double>(i) / sr));
    s.samples[i] = std::clamp(0.25 * env * rng.normal(), -1.0, 1.0);
  }
  return s;
}

inline AudioSegment silence(double seconds, int sr = 22050) {
  AudioSegment s;
  s.sample_rate = sr;
  s.samples.assign(static_cast<std::size_t>(std::llround(seconds * sr)), 0.0);
  return s;
}

/// Gaussian noise bursts at the given start times (seconds) over a silent bed.
inline AudioSegment bursts(const std::vector<double>& starts, double burst_s, double total_s,
                           std::uint64_t seed, int sr = 22050, double amp = 0.3) {
  respscreen::Rng rng(seed);
  AudioSegment s = silence(total_s, sr);
  for (double start : starts) {
    const auto a = static_cast<std::size_t>(start * sr);
    const auto b = std::min(s.samples.size(), static_cast<std::size_t>((start + burst_s) * sr));
    for (std::size_t i = a; i < b; ++i) s.samples[i] = std::clamp(amp * rng.normal(), -1.0, 1.0);
  }
  return s;
}

/// Single-sample clicks at `rate_hz` over `seconds`.
inline AudioSegment click_train(double rate_hz, double seconds, int sr = 22050) {
  AudioSegment s = silence(seconds, sr);
  for (double t = 0.05; t < seconds; t += 1.0 / rate_hz) {
    const auto i = static_cast<std::size_t>(std::llround(t * sr));
    if (i < s.samples.size()) s.samples[i] = 0.9;
  }
  return s;
}

}  // namespace signals
