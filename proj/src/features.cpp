#include "respscreen/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "respscreen/errors.hpp"

namespace respscreen::features {

namespace {

double frame_rate(int sample_rate, const HandcraftedConfig& cfg) {
  return static_cast<double>(sample_rate) / static_cast<double>(cfg.frame.hop_length);
}

// ln(1e8): 80 dB in power.
const double kOnsetDynamicRange = std::log(1e8);

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

}  // namespace

std::array<double, StatSummary::kCount> StatSummary::values() const {
  return {mean, median, rms, max, min, q1, q3, iqr, std, skewness, kurtosis};
}

const std::array<std::string_view, StatSummary::kCount>& StatSummary::names() {
  static const std::array<std::string_view, kCount> kNames = {
      "mean", "median", "rms", "max", "min", "q1", "q3", "iqr", "std", "skew", "kurtosis"};
  return kNames;
}

StatSummary summarize(std::span<const double> series) {
  if (series.empty()) throw EmptySeries("summarize: empty series");
  const auto n = static_cast<double>(series.size());

  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());

  StatSummary s;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = quantile_sorted(sorted, 0.5);
  s.q1 = quantile_sorted(sorted, 0.25);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.iqr = s.q3 - s.q1;

  double sum_sq = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : series) {
    sum_sq += x * x;
    const double d = x - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.rms = std::sqrt(sum_sq / n);
  s.std = std::sqrt(m2);

  // Variance at round-off level counts as zero.
  const double scale = std::max(std::abs(s.min), std::abs(s.max));
  const double var_floor = std::pow(1e-12 * std::max(scale, 1e-300), 2);
  if (m2 <= var_floor) {
    s.skewness = 0.0;
    s.kurtosis = 0.0;
  } else {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

double duration(const AudioSegment& seg) {
  return static_cast<double>(seg.samples.size()) / static_cast<double>(seg.sample_rate);
}

Eigen::MatrixXd log_mel_spectrogram(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  const auto spec = dsp::stft(seg, cfg.frame);
  const auto fb = dsp::mel_filterbank(seg.sample_rate, cfg.frame.frame_length, cfg.n_mels);
  return dsp::log_compress(fb.weights * spec.power());
}

std::vector<double> onset_envelope(const Eigen::MatrixXd& log_mel) {
  const auto n_frames = static_cast<std::size_t>(log_mel.cols());
  std::vector<double> env(n_frames, 0.0);
  if (n_frames == 0) return env;
  // Clamp to 80 dB below the loudest cell.
  const double floor = log_mel.maxCoeff() - kOnsetDynamicRange;
  const Eigen::MatrixXd clamped = log_mel.cwiseMax(floor);
  for (std::size_t t = 1; t < n_frames; ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    env[t] = (clamped.col(c) - clamped.col(c - 1)).cwiseMax(0.0).sum();
  }
  return env;
}

std::vector<double> onset_envelope(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  return onset_envelope(log_mel_spectrogram(seg, cfg));
}

std::vector<std::size_t> pick_onsets(std::span<const double> envelope, double frame_rate,
                                     const HandcraftedConfig& cfg) {
  std::vector<std::size_t> peaks;
  const std::size_t n = envelope.size();
  if (n == 0) return peaks;

  const double env_max = *std::max_element(envelope.begin(), envelope.end());
  const double delta = cfg.onset_delta_fraction * env_max;
  const std::size_t radius = cfg.onset_local_max_radius;
  const std::size_t mean_half = cfg.onset_mean_window / 2;
  const auto min_gap =
      static_cast<std::size_t>(std::ceil(cfg.onset_min_separation_s * frame_rate - 1e-9));

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + envelope[i];

  std::optional<std::size_t> last;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= radius ? t - radius : 0;
    const std::size_t hi = std::min(n - 1, t + radius);
    bool strict_max = true;
    for (std::size_t s = lo; s <= hi && strict_max; ++s) {
      if (s != t && envelope[s] >= envelope[t]) strict_max = false;
    }
    if (!strict_max) continue;

    const std::size_t a = t >= mean_half ? t - mean_half : 0;
    const std::size_t b = std::min(n, t + mean_half + 1);
    // Zero beyond the ends, so the window length is fixed.
    const double local_mean = (prefix[b] - prefix[a]) / static_cast<double>(2 * mean_half + 1);
    if (envelope[t] < local_mean + delta) continue;

    if (last && t - *last < min_gap) continue;
    peaks.push_back(t);
    last = t;
  }
  return peaks;
}

std::size_t onset_count(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  const auto env = onset_envelope(seg, cfg);
  return pick_onsets(env, frame_rate(seg.sample_rate, cfg), cfg).size();
}

double tempo_from_envelope(std::span<const double> envelope, double frame_rate,
                           const HandcraftedConfig& cfg) {
  const std::size_t n = envelope.size();
  if (std::all_of(envelope.begin(), envelope.end(), [](double v) { return v == 0.0; })) {
    return 0.0;
  }

  const double mean = std::accumulate(envelope.begin(), envelope.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(envelope.begin(), envelope.end());
  for (double& v : centered) v -= mean;

  const auto lag_min = static_cast<std::size_t>(std::ceil(60.0 * frame_rate / cfg.tempo_max_bpm));
  const auto lag_max = std::min(
      n - 1, static_cast<std::size_t>(std::floor(60.0 * frame_rate / cfg.tempo_min_bpm)));
  if (lag_min > lag_max || lag_min == 0) return 0.0;

  // Autocorrelation over lags lag_min-1 .. lag_max+1 with a [1/4, 1/2, 1/4] smoother.
  auto ac = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += centered[t] * centered[t + lag];
    return acc;
  };
  std::vector<double> raw(lag_max + 2, 0.0);
  for (std::size_t lag = lag_min - 1; lag <= lag_max + 1 && lag < n; ++lag) raw[lag] = ac(lag);

  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_lag = 0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    const double smoothed = 0.25 * raw[lag - 1] + 0.5 * raw[lag] + 0.25 * raw[lag + 1];
    const double bpm = 60.0 * frame_rate / static_cast<double>(lag);
    const double octaves = std::log2(bpm / cfg.tempo_prior_center_bpm) / cfg.tempo_prior_sigma_octaves;
    const double score = smoothed * std::exp(-0.5 * octaves * octaves);
    if (score > best_score) {
      best_score = score;
      best_lag = lag;
    }
  }
  if (best_lag == 0 || !(best_score > 0.0)) return 0.0;
  return 60.0 * frame_rate / static_cast<double>(best_lag);
}

double tempo(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  const auto env = onset_envelope(seg, cfg);
  return tempo_from_envelope(env, frame_rate(seg.sample_rate, cfg), cfg);
}

std::vector<double> rms_from_spectrogram(const dsp::Spectrogram& spec) {
  const std::size_t n_bins = spec.n_bins();
  const auto frame_length = static_cast<double>(spec.frame_length);
  std::vector<double> rms(spec.n_frames());
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double m = spec.magnitudes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
      double p = m * m;
      // DC and (for even lengths) Nyquist appear once in the two-sided spectrum.
      if (k == 0 || (spec.frame_length % 2 == 0 && k == n_bins - 1)) p *= 0.5;
      acc += p;
    }
    rms[t] = std::sqrt(2.0 * acc / (frame_length * frame_length));
  }
  return rms;
}

EnvelopePeriod envelope_period_from_rms(std::span<const double> rms, double frame_rate,
                                        const HandcraftedConfig& cfg) {
  EnvelopePeriod out;
  const std::size_t n = rms.size();
  if (n < cfg.period_min_frames) return out;
  const auto spectrum = dsp::rfft(rms);
  out.dc_magnitude = std::abs(spectrum[0]);
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = cfg.period_min_mode; k < spectrum.size(); ++k) {
    const double mag = std::abs(spectrum[k]);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  if (best == 0) return out;
  out.hz = static_cast<double>(best) * frame_rate / static_cast<double>(n);
  out.peak_magnitude = best_mag;
  return out;
}

EnvelopePeriod envelope_period_detail(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  const auto rms = rms_from_spectrogram(dsp::stft(seg, cfg.frame));
  return envelope_period_from_rms(rms, frame_rate(seg.sample_rate, cfg), cfg);
}

double envelope_period(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  return envelope_period_detail(seg, cfg).hz;
}

namespace {

FrameSeries frame_series(const AudioSegment& seg, const dsp::Spectrogram& spec,
                         const HandcraftedConfig& cfg) {
  FrameSeries fs;
  fs.rms = rms_from_spectrogram(spec);
  const std::size_t n_frames = spec.n_frames();
  const std::size_t n_bins = spec.n_bins();
  fs.centroid.resize(n_frames);
  fs.rolloff.resize(n_frames);
  fs.zcr.resize(n_frames);

  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto col = spec.magnitudes.col(static_cast<Eigen::Index>(t));
    const double mag_total = col.sum();
    double weighted = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) weighted += spec.bin_frequencies[k] * col(static_cast<Eigen::Index>(k));
    fs.centroid[t] = mag_total > 0.0 ? weighted / mag_total : 0.0;

    const double energy_total = col.squaredNorm();
    double rolloff = 0.0;
    if (energy_total > 0.0) {
      const double target = cfg.rolloff_fraction * energy_total;
      double cumulative = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double m = col(static_cast<Eigen::Index>(k));
        cumulative += m * m;
        if (cumulative >= target) {
          rolloff = spec.bin_frequencies[k];
          break;
        }
      }
    }
    fs.rolloff[t] = rolloff;

    // Zero counts as positive.
    const auto frame = dsp::centered_frame(seg.samples, t, cfg.frame);
    std::size_t crossings = 0;
    for (std::size_t i = 1; i < frame.size(); ++i) {
      if ((frame[i] >= 0.0) != (frame[i - 1] >= 0.0)) ++crossings;
    }
    fs.zcr[t] = static_cast<double>(crossings) / static_cast<double>(cfg.frame.frame_length);
  }
  return fs;
}

}  // namespace

FrameSeries frame_features(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  return frame_series(seg, dsp::stft(seg, cfg.frame), cfg);
}

Eigen::MatrixXd delta(const Eigen::MatrixXd& series, std::size_t width) {
  if (width < 3 || width % 2 == 0) throw std::invalid_argument("delta width must be odd and >= 3");
  const auto n = static_cast<std::size_t>(series.cols());
  if (n < width) {
    throw TooShort("delta needs at least " + std::to_string(width) + " frames, got " + std::to_string(n));
  }
  const auto half = static_cast<std::ptrdiff_t>(width / 2);
  double denom = 0.0;
  for (std::ptrdiff_t k = -half; k <= half; ++k) denom += static_cast<double>(k * k);

  Eigen::MatrixXd out(series.rows(), series.cols());
  const auto last_center = static_cast<std::ptrdiff_t>(n) - 1 - half;
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n); ++t) {
    const std::ptrdiff_t c = std::clamp(t, half, last_center);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(series.rows());
    for (std::ptrdiff_t k = -half; k <= half; ++k) acc += static_cast<double>(k) * series.col(c + k);
    out.col(t) = acc / denom;
  }
  return out;
}

MfccSet mfcc_from_log_mel(const Eigen::MatrixXd& log_mel, const HandcraftedConfig& cfg) {
  if (static_cast<std::size_t>(log_mel.cols()) < cfg.delta_width) {
    throw TooShort("segment has " + std::to_string(log_mel.cols()) + " frames, need at least " +
                   std::to_string(cfg.delta_width));
  }
  MfccSet out;
  out.mfcc = dsp::dct_ii(log_mel, cfg.n_mfcc);
  out.delta = delta(out.mfcc, cfg.delta_width);
  out.delta2 = delta(out.delta, cfg.delta_width);
  return out;
}

MfccSet mfcc_features(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  return mfcc_from_log_mel(log_mel_spectrogram(seg, cfg), cfg);
}

std::vector<double> HandcraftedVector::flat() const {
  std::vector<double> out;
  out.reserve(kDim);
  out.insert(out.end(), {duration, onsets, tempo, period});
  auto push = [&out](const StatSummary& s) {
    const auto v = s.values();
    out.insert(out.end(), v.begin(), v.end());
  };
  for (const auto* s : {&rms_stats, &centroid_stats, &rolloff_stats, &zcr_stats}) push(*s);
  for (const auto* block : {&mfcc_stats, &dmfcc_stats, &d2mfcc_stats}) {
    for (const auto& s : *block) push(s);
  }
  return out;
}

HandcraftedVector HandcraftedVector::from_flat(std::span<const double> values) {
  if (values.size() != kDim) {
    throw std::invalid_argument("handcrafted vector needs " + std::to_string(kDim) + " values, got " +
                                std::to_string(values.size()));
  }
  HandcraftedVector v;
  std::size_t i = 0;
  v.duration = values[i++];
  v.onsets = values[i++];
  v.tempo = values[i++];
  v.period = values[i++];
  auto pull = [&](StatSummary& s) {
    for (double* f : {&s.mean, &s.median, &s.rms, &s.max, &s.min, &s.q1, &s.q3, &s.iqr, &s.std,
                      &s.skewness, &s.kurtosis}) {
      *f = values[i++];
    }
  };
  for (auto* s : {&v.rms_stats, &v.centroid_stats, &v.rolloff_stats, &v.zcr_stats}) pull(*s);
  for (auto* block : {&v.mfcc_stats, &v.dmfcc_stats, &v.d2mfcc_stats}) {
    for (auto& s : *block) pull(s);
  }
  return v;
}

const std::vector<std::string>& HandcraftedVector::names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> n = {"duration", "onsets", "tempo", "period"};
    auto add = [&n](const std::string& prefix) {
      for (auto stat : StatSummary::names()) n.push_back(prefix + "." + std::string(stat));
    };
    for (const char* p : {"rms", "centroid", "rolloff", "zcr"}) add(p);
    for (const char* p : {"mfcc", "dmfcc", "d2mfcc"}) {
      for (std::size_t i = 0; i < kMfcc; ++i) add(p + std::to_string(i));
    }
    return n;
  }();
  return kNames;
}

HandcraftedVector extract_handcrafted(const AudioSegment& seg, const HandcraftedConfig& cfg) {
  if (seg.samples.empty()) throw SilentSample("empty segment");
  if (cfg.n_mfcc != HandcraftedVector::kMfcc) {
    throw std::invalid_argument("the handcrafted vector layout fixes 13 MFCCs");
  }
  cfg.frame.validate();

  const auto spec = dsp::stft(seg, cfg.frame);
  const auto fb = dsp::mel_filterbank(seg.sample_rate, cfg.frame.frame_length, cfg.n_mels);
  const Eigen::MatrixXd log_mel = dsp::log_compress(fb.weights * spec.power());
  const MfccSet mfcc = mfcc_from_log_mel(log_mel, cfg);
  const double fr = frame_rate(seg.sample_rate, cfg);

  HandcraftedVector v;
  v.duration = duration(seg);
  const auto env = onset_envelope(log_mel);
  v.onsets = static_cast<double>(pick_onsets(env, fr, cfg).size());
  v.tempo = tempo_from_envelope(env, fr, cfg);

  const FrameSeries fs = frame_series(seg, spec, cfg);
  v.period = envelope_period_from_rms(fs.rms, fr, cfg).hz;
  v.rms_stats = summarize(fs.rms);
  v.centroid_stats = summarize(fs.centroid);
  v.rolloff_stats = summarize(fs.rolloff);
  v.zcr_stats = summarize(fs.zcr);
  for (std::size_t i = 0; i < HandcraftedVector::kMfcc; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    v.mfcc_stats[i] = summarize(row(mfcc.mfcc, r));
    v.dmfcc_stats[i] = summarize(row(mfcc.delta, r));
    v.d2mfcc_stats[i] = summarize(row(mfcc.delta2, r));
  }
  return v;
}

}  // namespace respscreen::features
