#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace respscreen {

/// Mono waveform. Samples are in [-1, 1] once decoded.
struct AudioSegment {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

inline constexpr int kCanonicalSampleRate = 22050;

/// Decodes a RIFF/WAVE byte stream holding PCM16 or IEEE float32 audio with one
/// or two channels. Stereo is averaged to mono; PCM16 is scaled by 1/32768.
/// Throws MalformedWav or UnsupportedEncoding.
AudioSegment decode_wav(std::span<const std::uint8_t> bytes);
AudioSegment read_wav(const std::filesystem::path& path);

/// Encodes as mono PCM16. Samples are clipped to [-1, 1) and rounded.
std::vector<std::uint8_t> encode_wav_pcm16(const AudioSegment& seg);
/// Encodes as mono IEEE float32.
std::vector<std::uint8_t> encode_wav_float32(const AudioSegment& seg);
void write_wav(const std::filesystem::path& path, const AudioSegment& seg);

/// Band-limited resampling of a sample sequence by `ratio` (output/input
/// length). Output length is round(len * ratio).
std::vector<double> resample_by_ratio(std::span<const double> input, double ratio);

/// Converts to `target_rate` with a Kaiser-windowed sinc kernel. Identity when
/// the rates already match.
AudioSegment resample(const AudioSegment& seg, int target_rate);

struct TrimOptions {
  double threshold_db = 60.0;
  std::size_t frame_length = 2048;
  std::size_t hop_length = 512;
};

/// Removes leading and trailing frames whose RMS lies more than
/// `threshold_db` below the loudest frame. Throws SilentSample when the whole
/// segment is silent.
AudioSegment trim_silence(const AudioSegment& seg, const TrimOptions& opts = {});

/// Resample to the canonical rate, then trim.
AudioSegment canonicalize(const AudioSegment& seg);

/// Decode, resample to the canonical rate, trim.
AudioSegment load_canonical(const std::filesystem::path& path);

}  // namespace respscreen
