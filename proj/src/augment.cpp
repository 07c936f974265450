#include "respscreen/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "respscreen/errors.hpp"
#include "respscreen/rng.hpp"

namespace respscreen::augment {

void AugmentConfig::validate() const {
  for (const Range* r : {&amp_range, &rate_range, &noise_snr_db_range}) {
    if (!(r->lo <= r->hi)) throw ConfigError("augmentation range is not ordered");
  }
  if (!(rate_range.lo > 0.0)) throw ConfigError("rate range must be positive");
  if (copies_per_method != 2) throw ConfigError("copies_per_method is fixed at 2");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kAmplify: return "amplify";
    case Method::kWhiteNoise: return "noise";
    case Method::kPitchSpeed: return "pitch_speed";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::kAmplify, Method::kWhiteNoise, Method::kPitchSpeed}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown augmentation method '" + std::string(s) + "'");
}

AudioSegment amplify(const AudioSegment& seg, double factor) {
  AudioSegment out = seg;
  for (double& s : out.samples) s = std::clamp(s * factor, -1.0, 1.0);
  return out;
}

AudioSegment add_white_noise(const AudioSegment& seg, double snr_db, std::uint64_t seed) {
  const std::size_t n = seg.samples.size();
  double signal_power = 0.0;
  for (double s : seg.samples) signal_power += s * s;
  if (n == 0 || signal_power <= 0.0) throw SilentSample("white noise SNR is undefined for a silent segment");
  signal_power /= static_cast<double>(n);

  Rng rng(seed);
  std::vector<double> noise(n);
  double noise_mean = 0.0;
  for (double& v : noise) {
    v = rng.normal();
    noise_mean += v;
  }
  noise_mean /= static_cast<double>(n);
  double drawn_power = 0.0;
  for (double& v : noise) {
    v -= noise_mean;
    drawn_power += v * v;
  }
  drawn_power /= static_cast<double>(n);

  const double target_power = signal_power / std::pow(10.0, snr_db / 10.0);
  const double gain = drawn_power > 0.0 ? std::sqrt(target_power / drawn_power) : 0.0;
  AudioSegment out = seg;
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = std::clamp(seg.samples[i] + gain * noise[i], -1.0, 1.0);
  return out;
}

AudioSegment pitch_speed(const AudioSegment& seg, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  AudioSegment out;
  out.sample_rate = seg.sample_rate;
  out.samples = resample_by_ratio(seg.samples, 1.0 / rate);
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

std::uint64_t copy_seed(std::uint64_t global_seed, std::string_view sample_id, Method method, int copy_index) {
  return derive_seed(global_seed, sample_id, static_cast<std::uint64_t>(method), static_cast<std::uint64_t>(copy_index));
}

std::vector<AugmentedCopy> augment_six(const AudioSegment& seg, std::string_view sample_id, const AugmentConfig& cfg) {
  cfg.validate();
  std::vector<AugmentedCopy> out;
  out.reserve(6);
  for (Method method : {Method::kAmplify, Method::kWhiteNoise, Method::kPitchSpeed}) {
    for (int copy = 0; copy < cfg.copies_per_method; ++copy) {
      Provenance p{method, copy, 0.0, copy_seed(cfg.rng_seed, sample_id, method, copy)};
      Rng rng(p.seed);
      AudioSegment audio;
      switch (method) {
        case Method::kAmplify:
          p.parameter = rng.uniform(cfg.amp_range.lo, cfg.amp_range.hi);
          audio = amplify(seg, p.parameter);
          break;
        case Method::kWhiteNoise:
          p.parameter = rng.uniform(cfg.noise_snr_db_range.lo, cfg.noise_snr_db_range.hi);
          audio = add_white_noise(seg, p.parameter, splitmix64(p.seed));
          break;
        case Method::kPitchSpeed:
          p.parameter = rng.uniform(cfg.rate_range.lo, cfg.rate_range.hi);
          audio = pitch_speed(seg, p.parameter);
          break;
      }
      out.push_back({std::move(audio), p});
    }
  }
  return out;
}

std::string augmented_id(std::string_view parent_id, const Provenance& p) {
  return std::string(parent_id) + "#" + std::string(to_string(p.method)) + std::to_string(p.copy_index);
}

}  // namespace respscreen::augment
