#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "respscreen/audio_io.hpp"
#include "respscreen/dsp.hpp"

namespace respscreen::features {

/// Every tunable of the handcrafted extractor in one place.
struct HandcraftedConfig {
  dsp::FrameSpec frame{};
  std::size_t n_mels = 128;
  std::size_t n_mfcc = 13;
  std::size_t delta_width = 9;

  // Onset peak picking.
  std::size_t onset_local_max_radius = 3;
  std::size_t onset_mean_window = 11;
  double onset_delta_fraction = 0.3;  // of max(envelope)
  double onset_min_separation_s = 0.1;

  // Tempo search.
  double tempo_prior_center_bpm = 120.0;
  double tempo_prior_sigma_octaves = 1.0;
  double tempo_min_bpm = 30.0;
  double tempo_max_bpm = 300.0;

  double rolloff_fraction = 0.85;
  std::size_t period_min_mode = 4;
  std::size_t period_min_frames = 8;
};

struct StatSummary {
  static constexpr std::size_t kCount = 11;

  double mean = 0, median = 0, rms = 0, max = 0, min = 0, q1 = 0, q3 = 0, iqr = 0, std = 0,
         skewness = 0, kurtosis = 0;

  /// Canonical order: mean, median, rms, max, min, q1, q3, iqr, std, skew, kurtosis.
  std::array<double, kCount> values() const;
  static const std::array<std::string_view, kCount>& names();
};

/// Population moments, linearly interpolated quartiles, biased Fisher-Pearson
/// skewness and biased excess kurtosis (both 0 for a zero-variance series).
/// Throws EmptySeries.
StatSummary summarize(std::span<const double> series);

double duration(const AudioSegment& seg);

/// Sum over mel bands of the positive first difference of log-mel energy,
/// with log-mel clamped to 80 dB below its maximum. Entry 0 is 0.
std::vector<double> onset_envelope(const Eigen::MatrixXd& log_mel);
std::vector<double> onset_envelope(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

/// Frame indices of picked onset peaks.
std::vector<std::size_t> pick_onsets(std::span<const double> envelope, double frame_rate,
                                     const HandcraftedConfig& cfg = {});
std::size_t onset_count(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

/// Global tempo in BPM: autocorrelation of the onset envelope weighted by a
/// log-normal prior. 0 for an all-zero envelope.
double tempo_from_envelope(std::span<const double> envelope, double frame_rate,
                           const HandcraftedConfig& cfg = {});
double tempo(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

struct EnvelopePeriod {
  double hz = 0.0;              // frequency of the strongest mode >= period_min_mode
  double peak_magnitude = 0.0;  // |DFT| at that mode
  double dc_magnitude = 0.0;    // |DFT| at mode 0
};

EnvelopePeriod envelope_period_from_rms(std::span<const double> rms, double frame_rate,
                                        const HandcraftedConfig& cfg = {});
EnvelopePeriod envelope_period_detail(const AudioSegment& seg, const HandcraftedConfig& cfg = {});
double envelope_period(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

struct FrameSeries {
  std::vector<double> rms;
  std::vector<double> centroid;
  std::vector<double> rolloff;
  std::vector<double> zcr;
};

/// RMS of a windowed frame from its one-sided magnitude spectrum.
std::vector<double> rms_from_spectrogram(const dsp::Spectrogram& spec);
FrameSeries frame_features(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

struct MfccSet {
  Eigen::MatrixXd mfcc;    // [n_mfcc x n_frames]
  Eigen::MatrixXd delta;   // first temporal derivative
  Eigen::MatrixXd delta2;  // delta of delta
};

/// Local least-squares slope over `width` frames along each row. Frames within
/// width/2 of either edge take the slope of the nearest full window. Throws
/// TooShort when there are fewer than `width` frames.
Eigen::MatrixXd delta(const Eigen::MatrixXd& series, std::size_t width = 9);

Eigen::MatrixXd log_mel_spectrogram(const AudioSegment& seg, const HandcraftedConfig& cfg = {});
MfccSet mfcc_from_log_mel(const Eigen::MatrixXd& log_mel, const HandcraftedConfig& cfg = {});
MfccSet mfcc_features(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

/// The 477-dimensional handcrafted representation of one recording.
struct HandcraftedVector {
  static constexpr std::size_t kMfcc = 13;
  static constexpr std::size_t kDim = 4 + 4 * StatSummary::kCount + 3 * kMfcc * StatSummary::kCount;
  /// Segment-level and frame-level part, i.e. everything but the delta blocks.
  static constexpr std::size_t kStaticDim = 4 + 4 * StatSummary::kCount + kMfcc * StatSummary::kCount;

  double duration = 0.0;
  double onsets = 0.0;
  double tempo = 0.0;
  double period = 0.0;
  StatSummary rms_stats, centroid_stats, rolloff_stats, zcr_stats;
  std::array<StatSummary, kMfcc> mfcc_stats{}, dmfcc_stats{}, d2mfcc_stats{};

  /// Canonical order: duration, onsets, tempo, period, rms.*, centroid.*,
  /// rolloff.*, zcr.*, mfcc{i}.* for i = 0..12, dmfcc{i}.*, d2mfcc{i}.*.
  std::vector<double> flat() const;
  static HandcraftedVector from_flat(std::span<const double> values);
  static const std::vector<std::string>& names();
};

/// Expects a decoded, resampled and trimmed segment. Throws TooShort when the
/// segment yields fewer frames than the delta window.
HandcraftedVector extract_handcrafted(const AudioSegment& seg, const HandcraftedConfig& cfg = {});

}  // namespace respscreen::features
