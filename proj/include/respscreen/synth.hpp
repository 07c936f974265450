#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "respscreen/audio_io.hpp"
#include "respscreen/dataset.hpp"
#include "respscreen/embeddings.hpp"

namespace respscreen::synth {

/// Users and sessions of one population group. Every user gets at least one
/// session; the surplus is spread over users by the seeded generator.
struct GroupSpec {
  std::size_t users = 0;
  std::size_t sessions = 0;
};

/// Groups map onto the task filters:
///   positive       tested positive; a `positive_cough_fraction` share of
///                  sessions report a cough
///   healthy        Task 1 negatives
///   healthy_cough  Task 2 negatives
///   asthma_cough   Task 3 negatives
///   distractor     fail every negative filter (high-prevalence country or
///                  current smoker)
/// `incomplete_sessions` extra sessions from distractor users carry a cough
/// recording only and drop out of two-modality cohorts.
struct SynthConfig {
  std::uint64_t seed = 0;
  GroupSpec positive{62, 141};
  GroupSpec healthy{220, 298};
  GroupSpec healthy_cough{0, 0};
  GroupSpec asthma_cough{0, 0};
  GroupSpec distractor{0, 0};
  std::size_t incomplete_sessions = 0;
  double positive_cough_fraction = 0.6;

  /// Positives get bursts centred at `positive_hz`, negatives at
  /// `negative_hz`. With `scramble` the centre is a per-session coin flip
  /// independent of the label.
  double positive_hz = 400.0;
  double negative_hz = 1600.0;
  bool scramble = false;

  double duration_s = 1.5;
  int sample_rate = kCanonicalSampleRate;
  bool embeddings = false;

  void validate() const;  // throws ConfigError
};

/// A 200-user population exercising all three tasks.
SynthConfig all_tasks_config(std::uint64_t seed);

struct SynthCohort {
  std::vector<dataset::SampleRecord> records;
  std::map<std::string, AudioSegment> audio;  // by record key
  embeddings::EmbeddingTable embeddings;      // by record key; empty unless requested
  std::map<std::string, int> spectral_class;  // by sample_id: 1 = positive centre
};

SynthCohort generate(const SynthConfig& cfg);

/// Writes manifest.csv, audio/<key>.wav and, when present, embeddings.csv
/// under `dir`. Audio paths in the manifest are relative to `dir`.
void write(const SynthCohort& cohort, const std::filesystem::path& dir);

}  // namespace respscreen::synth
