#include "respscreen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "respscreen/errors.hpp"
#include "respscreen/io.hpp"
#include "respscreen/rng.hpp"

namespace respscreen::synth {

namespace {

using dataset::Modality;
using dataset::SampleRecord;
using dataset::Smoker;

enum class Group { kPositive, kHealthy, kHealthyCough, kAsthmaCough, kDistractor, kIncomplete };

const std::vector<std::string> kLowPrevalence = {"AL", "BG", "CY", "GR", "JO", "LB", "LK", "TN", "VN"};
const std::vector<std::string> kHighPrevalence = {"GB", "IT", "US", "ES", "BR", "IN"};

struct Session {
  Group group;
  std::size_t user;  // global user index
};

std::string pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.index(v.size())]; }

// Adds `count` Hann-shaped bursts of a tone cluster around `centre_hz`.
void add_bursts(std::vector<double>& x, int sr, Rng& rng, int count, double min_len, double max_len,
                double centre_hz, double lo_amp, double hi_amp) {
  const double total = static_cast<double>(x.size()) / sr;
  for (int b = 0; b < count; ++b) {
    const double len = rng.uniform(min_len, max_len);
    const double start = rng.uniform(0.05, std::max(0.06, total - len - 0.05));
    const double amp = rng.uniform(lo_amp, hi_amp);
    const double f0 = centre_hz * rng.uniform(0.95, 1.05);
    double freq[3] = {f0 * 0.93, f0, f0 * 1.07};
    double phase[3];
    for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const auto s0 = static_cast<std::size_t>(start * sr);
    const auto n = static_cast<std::size_t>(len * sr);
    for (std::size_t i = 0; i < n && s0 + i < x.size(); ++i) {
      const double t = static_cast<double>(i) / sr;
      const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += std::sin(2.0 * std::numbers::pi * freq[k] * t + phase[k]);
      x[s0 + i] += amp * env * v / 3.0;
    }
  }
}

AudioSegment make_audio(Modality m, double centre_hz, const SynthConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate));
  std::vector<double> x(n);
  for (double& v : x) v = 0.003 * rng.normal();
  if (m == Modality::kCough) {
    add_bursts(x, cfg.sample_rate, rng, 2 + static_cast<int>(rng.index(3)), 0.12, 0.25, centre_hz, 0.3, 0.8);
  } else {
    add_bursts(x, cfg.sample_rate, rng, 1 + static_cast<int>(rng.index(2)), 0.35, 0.6, centre_hz, 0.1, 0.3);
  }
  for (double& v : x) v = std::clamp(v, -1.0, 1.0);
  return AudioSegment{std::move(x), cfg.sample_rate};
}

embeddings::EmbeddingFrames make_embedding(const std::string& id, int cls, const SynthConfig& cfg,
                                           std::uint64_t seed) {
  Rng rng(seed);
  const auto frames = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(cfg.duration_s / 0.96));
  embeddings::EmbeddingFrames e{id, Eigen::MatrixXd(frames, embeddings::kFrameDim)};
  const double shift = cls == 1 ? 0.8 : -0.8;
  for (Eigen::Index r = 0; r < frames; ++r) {
    for (Eigen::Index c = 0; c < e.frames.cols(); ++c) {
      e.frames(r, c) = rng.normal() + (c < 16 ? shift : 0.0);
    }
  }
  return e;
}

}  // namespace

void SynthConfig::validate() const {
  for (const GroupSpec* g : {&positive, &healthy, &healthy_cough, &asthma_cough, &distractor}) {
    if (g->sessions < g->users) throw ConfigError("each synthetic user needs at least one session");
    if (g->users == 0 && g->sessions != 0) throw ConfigError("synthetic sessions need users");
  }
  if (incomplete_sessions > 0 && distractor.users == 0) {
    throw ConfigError("incomplete sessions are drawn from distractor users");
  }
  if (!(duration_s >= 0.5)) throw ConfigError("synthetic duration must be at least 0.5 s");
  if (sample_rate < 8000) throw ConfigError("synthetic sample rate must be at least 8000 Hz");
  if (!(positive_cough_fraction >= 0.0 && positive_cough_fraction <= 1.0)) {
    throw ConfigError("positive cough fraction must lie in [0, 1]");
  }
  const double nyquist = sample_rate / 2.0;
  if (!(positive_hz > 0 && positive_hz * 1.2 < nyquist && negative_hz > 0 && negative_hz * 1.2 < nyquist)) {
    throw ConfigError("burst centre frequencies must lie below Nyquist");
  }
}

SynthConfig all_tasks_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.positive = {60, 90};
  cfg.healthy = {50, 70};
  cfg.healthy_cough = {35, 45};
  cfg.asthma_cough = {35, 45};
  cfg.distractor = {20, 25};
  cfg.incomplete_sessions = 5;
  cfg.duration_s = 1.0;
  return cfg;
}

SynthCohort generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "synth-layout"));

  std::vector<Session> sessions;
  std::size_t user_base = 0;
  auto add_group = [&](Group g, const GroupSpec& spec) {
    std::vector<std::size_t> owners;
    for (std::size_t u = 0; u < spec.users; ++u) owners.push_back(user_base + u);
    for (std::size_t s = spec.users; s < spec.sessions; ++s) owners.push_back(user_base + rng.index(spec.users));
    for (std::size_t u : owners) sessions.push_back({g, u});
    user_base += spec.users;
  };
  add_group(Group::kPositive, cfg.positive);
  add_group(Group::kHealthy, cfg.healthy);
  add_group(Group::kHealthyCough, cfg.healthy_cough);
  add_group(Group::kAsthmaCough, cfg.asthma_cough);
  const std::size_t distractor_base = user_base;
  add_group(Group::kDistractor, cfg.distractor);
  for (std::size_t i = 0; i < cfg.incomplete_sessions; ++i) {
    sessions.push_back({Group::kIncomplete, distractor_base + rng.index(cfg.distractor.users)});
  }
  rng.shuffle(sessions);

  // Per-session cough flags for positives: an exact share, not a coin flip.
  std::vector<std::size_t> positive_idx;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (sessions[i].group == Group::kPositive) positive_idx.push_back(i);
  }
  std::vector<bool> coughs(sessions.size(), false);
  const auto n_cough = static_cast<std::size_t>(
      std::llround(cfg.positive_cough_fraction * static_cast<double>(positive_idx.size())));
  rng.shuffle(positive_idx);
  for (std::size_t i = 0; i < n_cough; ++i) coughs[positive_idx[i]] = true;

  // Per-user metadata stays fixed across a user's sessions.
  std::map<std::size_t, std::pair<std::string, Smoker>> user_meta;

  SynthCohort out;
  char buf[32];
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const Session& s = sessions[i];
    SampleRecord base;
    std::snprintf(buf, sizeof buf, "s%05zu", i + 1);
    base.sample_id = buf;
    std::snprintf(buf, sizeof buf, "u%04zu", s.user + 1);
    base.user_id = buf;
    std::snprintf(buf, sizeof buf, "2020-%02zu-%02zuT12:00:00Z", 4 + (i / 28) % 6, 1 + i % 28);
    base.collected_at = buf;

    auto [meta, fresh] = user_meta.try_emplace(s.user);
    if (fresh) {
      switch (s.group) {
        case Group::kPositive: {
          const bool low = rng.uniform() < 0.3;
          const Smoker smokers[] = {Smoker::kNever, Smoker::kEx, Smoker::kCurrent};
          meta->second = {pick(rng, low ? kLowPrevalence : kHighPrevalence), smokers[rng.index(3)]};
          break;
        }
        case Group::kHealthy:
        case Group::kHealthyCough:
          meta->second = {pick(rng, kLowPrevalence), Smoker::kNever};
          break;
        case Group::kAsthmaCough:
          meta->second = {pick(rng, kLowPrevalence), rng.uniform() < 0.5 ? Smoker::kNever : Smoker::kEx};
          break;
        case Group::kDistractor:
        case Group::kIncomplete:
          if (rng.uniform() < 0.5) {
            meta->second = {pick(rng, kHighPrevalence), Smoker::kNever};
          } else {
            meta->second = {pick(rng, kLowPrevalence), Smoker::kCurrent};
          }
          break;
      }
    }
    base.country = meta->second.first;
    base.smoker = meta->second.second;

    switch (s.group) {
      case Group::kPositive:
        base.covid_tested_positive = true;
        if (coughs[i]) base.symptoms = {"dry_cough", "fever"};
        else if (rng.uniform() < 0.5) base.symptoms = {"fever"};
        if (rng.uniform() < 0.2) base.medical_history = {"hypertension"};
        break;
      case Group::kHealthy:
        break;
      case Group::kHealthyCough:
        base.symptoms = {"cough"};
        if (rng.uniform() < 0.3) base.symptoms.insert("sore_throat");
        break;
      case Group::kAsthmaCough:
        base.symptoms = {"dry_cough"};
        base.medical_history = {"asthma"};
        break;
      case Group::kDistractor:
      case Group::kIncomplete:
        if (rng.uniform() < 0.5) base.symptoms = {"wet_cough"};
        break;
    }

    const bool positive_label = s.group == Group::kPositive;
    int cls = positive_label ? 1 : 0;
    if (cfg.scramble) cls = rng.uniform() < 0.5 ? 1 : 0;
    out.spectral_class[base.sample_id] = cls;
    const double centre = cls == 1 ? cfg.positive_hz : cfg.negative_hz;

    for (Modality m : {Modality::kCough, Modality::kBreath}) {
      if (m == Modality::kBreath && s.group == Group::kIncomplete) continue;
      SampleRecord r = base;
      r.modality = m;
      r.audio_path = "audio/" + r.key() + ".wav";
      const std::string key = r.key();
      out.audio.emplace(key, make_audio(m, centre, cfg, derive_seed(cfg.seed, "synth-audio", key)));
      if (cfg.embeddings) {
        out.embeddings.emplace(key, make_embedding(key, cls, cfg, derive_seed(cfg.seed, "synth-embedding", key)));
      }
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

void write(const SynthCohort& cohort, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "audio", ec);
  if (ec) throw IoError("cannot create " + (dir / "audio").string() + ": " + ec.message());
  for (const auto& r : cohort.records) {
    write_wav(dir / r.audio_path, cohort.audio.at(r.key()));
  }
  if (!cohort.embeddings.empty()) {
    write_file_atomic(dir / "embeddings.csv", embeddings::format_embeddings(cohort.embeddings));
  }
  write_file_atomic(dir / "manifest.csv", dataset::format_manifest(cohort.records));
}

}  // namespace respscreen::synth
