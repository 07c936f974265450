#include "respscreen/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <optional>
#include <string>

#include "respscreen/errors.hpp"
#include "respscreen/io.hpp"

namespace respscreen {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t off, const char* tag) {
  return std::memcmp(b.data() + off, tag, 4) == 0;
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

FormatChunk parse_fmt(std::span<const std::uint8_t> chunk) {
  if (chunk.size() < 16) throw MalformedWav("fmt chunk shorter than 16 bytes");
  FormatChunk fmt;
  fmt.format = read_u16(chunk, 0);
  fmt.channels = read_u16(chunk, 2);
  fmt.sample_rate = read_u32(chunk, 4);
  fmt.bits_per_sample = read_u16(chunk, 14);
  if (fmt.format == kFormatExtensible) {
    if (chunk.size() < 26) throw MalformedWav("truncated WAVE_FORMAT_EXTENSIBLE");
    // First two bytes of the sub-format GUID carry the actual format tag.
    fmt.format = read_u16(chunk, 24);
  }
  return fmt;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::vector<std::uint8_t> encode(const AudioSegment& seg, std::uint16_t format,
                                 std::uint16_t bits) {
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(seg.samples.size() * bytes_per_sample);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(seg.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(seg.sample_rate) * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (double s : seg.samples) {
    if (format == kFormatPcm) {
      const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      put_u16(out, static_cast<std::uint16_t>(q));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }
  return out;
}

}  // namespace

AudioSegment decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw MalformedWav("shorter than a RIFF header");
  if (!tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw MalformedWav("missing RIFF/WAVE signature");
  }

  std::optional<FormatChunk> fmt;
  std::span<const std::uint8_t> data;
  bool have_data = false;
  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, off + 4);
    const std::size_t body = off + 8;
    if (size > bytes.size() - body) {
      throw MalformedWav("chunk extends past end of stream");
    }
    auto chunk = bytes.subspan(body, size);
    if (tag_is(bytes, off, "fmt ")) {
      fmt = parse_fmt(chunk);
    } else if (tag_is(bytes, off, "data")) {
      data = chunk;
      have_data = true;
    }
    off = body + size + (size & 1u);
  }
  if (!fmt) throw MalformedWav("no fmt chunk");
  if (!have_data) throw MalformedWav("no data chunk");
  if (fmt->channels != 1 && fmt->channels != 2) {
    throw UnsupportedEncoding("channel count " + std::to_string(fmt->channels));
  }
  if (fmt->sample_rate == 0) throw MalformedWav("sample rate is zero");

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits_per_sample == 16;
  const bool float32 = fmt->format == kFormatFloat && fmt->bits_per_sample == 32;
  if (!pcm16 && !float32) {
    throw UnsupportedEncoding("format tag " + std::to_string(fmt->format) + " with " +
                              std::to_string(fmt->bits_per_sample) + " bits per sample");
  }

  const std::size_t bytes_per_sample = fmt->bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t n_frames = data.size() / frame_bytes;

  AudioSegment seg;
  seg.sample_rate = static_cast<int>(fmt->sample_rate);
  seg.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const std::size_t p = i * frame_bytes + c * bytes_per_sample;
      double v = 0.0;
      if (pcm16) {
        v = static_cast<std::int16_t>(read_u16(data, p)) / 32768.0;
      } else {
        v = std::bit_cast<float>(read_u32(data, p));
        if (!std::isfinite(v)) throw MalformedWav("non-finite float sample");
        v = std::clamp(v, -1.0, 1.0);
      }
      acc += v;
    }
    seg.samples[i] = acc / fmt->channels;
  }
  return seg;
}

AudioSegment read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioSegment& seg) {
  return encode(seg, kFormatPcm, 16);
}

std::vector<std::uint8_t> encode_wav_float32(const AudioSegment& seg) {
  return encode(seg, kFormatFloat, 32);
}

void write_wav(const std::filesystem::path& path, const AudioSegment& seg) {
  write_file_atomic(path, encode_wav_pcm16(seg));
}

namespace {

// Windowed-sinc kernel: 64 taps at the narrower of the two rates, Kaiser
// window, tabulated and linearly interpolated.
class SincKernel {
 public:
  static constexpr int kZeroCrossings = 32;
  static constexpr int kTableResolution = 1024;
  static constexpr double kBeta = 8.6;

  static const SincKernel& instance() {
    static const SincKernel k;
    return k;
  }

  // x in zero-crossing units.
  double operator()(double x) const {
    x = std::abs(x);
    if (x >= kZeroCrossings) return 0.0;
    const double pos = x * kTableResolution;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

 private:
  SincKernel() {
    const std::size_t n = kZeroCrossings * kTableResolution + 2;
    table_.resize(n);
    const double norm = bessel_i0(kBeta);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / kTableResolution;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double r = x / kZeroCrossings;
      const double window = r >= 1.0 ? 0.0 : bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / norm;
      table_[i] = sinc * window;
    }
  }

  static double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum;
  }

  std::vector<double> table_;
};

}  // namespace

std::vector<double> resample_by_ratio(std::span<const double> input, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("resample ratio must be positive");
  }
  const auto n_out =
      static_cast<std::size_t>(std::llround(static_cast<double>(input.size()) * ratio));
  std::vector<double> out(n_out, 0.0);
  if (input.empty()) return out;

  const SincKernel& kernel = SincKernel::instance();
  // Below 1 when downsampling: the kernel is stretched to cut at the output Nyquist.
  const double cutoff = std::min(1.0, ratio);
  const double half_width = SincKernel::kZeroCrossings / cutoff;
  const auto n_in = static_cast<std::ptrdiff_t>(input.size());

  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    double weight_sum = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      const double w = kernel((t - static_cast<double>(k)) * cutoff);
      acc += w * input[static_cast<std::size_t>(k)];
      weight_sum += w;
    }
    // Normalising by the tap sum keeps DC exact, including at the edges.
    out[j] = weight_sum > 0.0 ? acc / weight_sum : 0.0;
  }
  return out;
}

AudioSegment resample(const AudioSegment& seg, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("target rate must be positive");
  if (seg.sample_rate <= 0) throw std::invalid_argument("source rate must be positive");
  if (target_rate == seg.sample_rate) return seg;
  AudioSegment out;
  out.sample_rate = target_rate;
  out.samples = resample_by_ratio(seg.samples, static_cast<double>(target_rate) / seg.sample_rate);
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

AudioSegment trim_silence(const AudioSegment& seg, const TrimOptions& opts) {
  if (!(opts.threshold_db > 0.0)) throw std::invalid_argument("threshold_db must be positive");
  if (opts.hop_length == 0 || opts.hop_length > opts.frame_length) {
    throw std::invalid_argument("invalid trim framing");
  }
  const std::size_t n = seg.samples.size();
  if (n == 0) throw SilentSample("empty segment");

  // Centered frames with zero padding; frame t spans [t*hop - L/2, t*hop + L/2).
  const std::size_t n_frames = 1 + n / opts.hop_length;
  const auto half = static_cast<std::ptrdiff_t>(opts.frame_length / 2);

  // Prefix sums of squares make each frame O(1).
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + seg.samples[i] * seg.samples[i];

  std::vector<double> mean_square(n_frames);
  double peak = 0.0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto center = static_cast<std::ptrdiff_t>(t * opts.hop_length);
    const auto a = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(center - half, 0, static_cast<std::ptrdiff_t>(n)));
    const auto b = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(center + half, 0, static_cast<std::ptrdiff_t>(n)));
    mean_square[t] = std::max(0.0, prefix[b] - prefix[a]) / static_cast<double>(opts.frame_length);
    peak = std::max(peak, mean_square[t]);
  }
  if (peak <= 0.0) throw SilentSample("segment is digital silence");

  // RMS ratio threshold expressed on mean squares.
  const double floor = peak * std::pow(10.0, -opts.threshold_db / 10.0);
  std::size_t first = n_frames;
  std::size_t last = 0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    if (mean_square[t] > floor) {
      first = std::min(first, t);
      last = t;
    }
  }
  if (first == n_frames) throw SilentSample("no frame above threshold");

  const std::size_t start = first * opts.hop_length;
  const std::size_t end = std::min(n, (last + 1) * opts.hop_length);
  if (end <= start) throw SilentSample("nothing left after trimming");

  AudioSegment out;
  out.sample_rate = seg.sample_rate;
  out.samples.assign(seg.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     seg.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

AudioSegment canonicalize(const AudioSegment& seg) { return trim_silence(resample(seg, kCanonicalSampleRate)); }

AudioSegment load_canonical(const std::filesystem::path& path) { return canonicalize(read_wav(path)); }

}  // namespace respscreen
