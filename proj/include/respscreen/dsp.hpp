#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "respscreen/audio_io.hpp"

namespace respscreen::dsp {

enum class Window { kHann };

struct FrameSpec {
  std::size_t frame_length = 2048;
  std::size_t hop_length = 512;
  Window window = Window::kHann;

  /// Throws std::invalid_argument unless 0 < hop_length <= frame_length.
  void validate() const;
};

/// Periodic window of the given length.
std::vector<double> make_window(Window window, std::size_t length);

/// Number of centered frames for a signal of `n` samples: 1 + n / hop.
std::size_t frame_count(std::size_t n, const FrameSpec& spec);

/// Frame `t` of the signal, centered at t*hop with reflect padding of L/2 on
/// both sides. Unwindowed.
std::vector<double> centered_frame(std::span<const double> x, std::size_t t, const FrameSpec& spec);

/// In-place complex FFT. Any length; radix-2 when the length is a power of two,
/// direct O(n^2) DFT otherwise.
void fft(std::vector<std::complex<double>>& data);

/// One-sided spectrum (n/2 + 1 bins) of a real signal.
std::vector<std::complex<double>> rfft(std::span<const double> x);

struct Spectrogram {
  Eigen::MatrixXd magnitudes;  // [n_bins x n_frames]
  std::vector<double> bin_frequencies;
  std::size_t frame_length = 0;

  std::size_t n_bins() const { return static_cast<std::size_t>(magnitudes.rows()); }
  std::size_t n_frames() const { return static_cast<std::size_t>(magnitudes.cols()); }
  Eigen::MatrixXd power() const { return magnitudes.array().square().matrix(); }
};

Spectrogram stft(const AudioSegment& seg, const FrameSpec& spec = {});

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  Eigen::MatrixXd weights;  // [n_mels x n_bins]
  std::size_t n_mels() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Slaney-normalised triangular filters spanning 0 Hz to sr/2.
MelFilterbank mel_filterbank(int sample_rate, std::size_t frame_length, std::size_t n_mels = 128);

/// ln(x + 1e-10), elementwise.
Eigen::MatrixXd log_compress(const Eigen::MatrixXd& power);
inline constexpr double kLogFloor = 1e-10;

/// Orthonormal DCT-II along rows (the mel axis), keeping the first `n_out`
/// coefficients of each column.
Eigen::MatrixXd dct_ii(const Eigen::MatrixXd& matrix, std::size_t n_out);

/// Inverse of the full orthonormal DCT-II (i.e. DCT-III).
Eigen::MatrixXd idct_ii(const Eigen::MatrixXd& coefficients);

}  // namespace respscreen::dsp
