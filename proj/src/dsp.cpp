#include "respscreen/dsp.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace respscreen::dsp {

namespace {
constexpr double kPi = std::numbers::pi;
}

void FrameSpec::validate() const {
  if (frame_length == 0 || hop_length == 0 || hop_length > frame_length) {
    throw std::invalid_argument("FrameSpec requires 0 < hop_length <= frame_length");
  }
}

std::vector<double> make_window(Window window, std::size_t length) {
  std::vector<double> w(length);
  switch (window) {
    case Window::kHann:
      for (std::size_t i = 0; i < length; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(length));
      }
      break;
  }
  return w;
}

std::size_t frame_count(std::size_t n, const FrameSpec& spec) { return 1 + n / spec.hop_length; }

namespace {

// numpy 'reflect' (edge sample not repeated), valid for any offset.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

std::vector<double> centered_frame(std::span<const double> x, std::size_t t, const FrameSpec& spec) {
  std::vector<double> frame(spec.frame_length);
  const auto start = static_cast<std::ptrdiff_t>(t * spec.hop_length) -
                     static_cast<std::ptrdiff_t>(spec.frame_length / 2);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t i = 0; i < spec.frame_length; ++i) {
    const std::ptrdiff_t p = start + static_cast<std::ptrdiff_t>(i);
    frame[i] = (p >= 0 && p < n) ? x[static_cast<std::size_t>(p)] : x[reflect_index(p, x.size())];
  }
  return frame;
}

void fft(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  if (!std::has_single_bit(n)) {
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double angle = -2.0 * kPi * static_cast<double>((k * j) % n) / static_cast<double>(n);
        acc += data[j] * std::polar(1.0, angle);
      }
      out[k] = acc;
    }
    data = std::move(out);
    return;
  }

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const std::complex<double> w = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / static_cast<double>(len));
      for (std::size_t i = 0; i < n; i += len) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + half] * w;
        data[i + k] = u + v;
        data[i + k + half] = u - v;
      }
    }
  }
}

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  std::vector<std::complex<double>> buf(x.begin(), x.end());
  fft(buf);
  buf.resize(x.size() / 2 + 1);
  return buf;
}

Spectrogram stft(const AudioSegment& seg, const FrameSpec& spec) {
  spec.validate();
  if (seg.samples.empty()) throw std::invalid_argument("stft of an empty segment");
  const std::size_t n_frames = frame_count(seg.samples.size(), spec);
  const std::size_t n_bins = spec.frame_length / 2 + 1;
  const auto window = make_window(spec.window, spec.frame_length);

  Spectrogram out;
  out.frame_length = spec.frame_length;
  out.magnitudes.resize(static_cast<Eigen::Index>(n_bins), static_cast<Eigen::Index>(n_frames));
  out.bin_frequencies.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    out.bin_frequencies[k] = static_cast<double>(k) * seg.sample_rate / static_cast<double>(spec.frame_length);
  }

  std::vector<std::complex<double>> buf(spec.frame_length);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto frame = centered_frame(seg.samples, t, spec);
    for (std::size_t i = 0; i < spec.frame_length; ++i) buf[i] = frame[i] * window[i];
    fft(buf);
    for (std::size_t k = 0; k < n_bins; ++k) {
      out.magnitudes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = std::abs(buf[k]);
    }
  }
  return out;
}

namespace {
constexpr double kMelFSp = 200.0 / 3.0;
constexpr double kMelMinLogHz = 1000.0;
constexpr double kMelMinLogMel = kMelMinLogHz / kMelFSp;
const double kMelLogStep = std::log(6.4) / 27.0;
}  // namespace

double hz_to_mel(double hz) {
  if (hz < kMelMinLogHz) return hz / kMelFSp;
  return kMelMinLogMel + std::log(hz / kMelMinLogHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelMinLogMel) return mel * kMelFSp;
  return kMelMinLogHz * std::exp(kMelLogStep * (mel - kMelMinLogMel));
}

MelFilterbank mel_filterbank(int sample_rate, std::size_t frame_length, std::size_t n_mels) {
  if (n_mels == 0) throw std::invalid_argument("n_mels must be at least 1");
  if (sample_rate <= 0 || frame_length == 0) throw std::invalid_argument("invalid filterbank geometry");
  const std::size_t n_bins = frame_length / 2 + 1;

  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }

  MelFilterbank fb;
  fb.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_mels), static_cast<Eigen::Index>(n_bins));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lower_width = edges[m + 1] - edges[m];
    const double upper_width = edges[m + 2] - edges[m + 1];
    const double area_norm = 2.0 / (edges[m + 2] - edges[m]);
    bool any = false;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(frame_length);
      const double rising = (f - edges[m]) / lower_width;
      const double falling = (edges[m + 2] - f) / upper_width;
      const double w = std::max(0.0, std::min(rising, falling));
      if (w > 0.0) any = true;
      fb.weights(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = w * area_norm;
    }
    if (!any) {
      throw std::invalid_argument("mel filter " + std::to_string(m) +
                                  " covers no FFT bin; use fewer mels or a longer frame");
    }
  }
  return fb;
}

Eigen::MatrixXd log_compress(const Eigen::MatrixXd& power) {
  return (power.array() + kLogFloor).log().matrix();
}

namespace {

Eigen::MatrixXd dct_basis(std::size_t n_out, std::size_t n_in) {
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_in));
  const double n = static_cast<double>(n_in);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n_in; ++i) {
      basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          scale * std::cos(kPi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
    }
  }
  return basis;
}

}  // namespace

Eigen::MatrixXd dct_ii(const Eigen::MatrixXd& matrix, std::size_t n_out) {
  const auto n_in = static_cast<std::size_t>(matrix.rows());
  if (n_out > n_in) throw std::invalid_argument("dct_ii: n_out exceeds input rows");
  return dct_basis(n_out, n_in) * matrix;
}

Eigen::MatrixXd idct_ii(const Eigen::MatrixXd& coefficients) {
  const auto n = static_cast<std::size_t>(coefficients.rows());
  return dct_basis(n, n).transpose() * coefficients;
}

}  // namespace respscreen::dsp
