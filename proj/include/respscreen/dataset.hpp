#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace respscreen::dataset {

enum class Modality { kCough, kBreath };
enum class Smoker { kNever, kEx, kCurrent, kUnknown };

std::string_view to_string(Modality m);
std::string_view to_string(Smoker s);
Modality parse_modality(std::string_view s);  // throws SchemaError
Smoker parse_smoker(std::string_view s);      // throws SchemaError

/// One recording. (sample_id, modality) is unique; the cough and breath
/// recordings of one session share a sample_id.
struct SampleRecord {
  std::string sample_id;
  std::string user_id;
  Modality modality = Modality::kCough;
  std::string audio_path;  // relative paths resolve against the manifest directory
  bool covid_tested_positive = false;
  std::set<std::string> symptoms;
  std::set<std::string> medical_history;
  Smoker smoker = Smoker::kUnknown;
  std::string country;  // ISO 3166 alpha-2, empty when unknown
  std::string collected_at;

  /// "<sample_id>@<modality>": row key of feature and embedding files.
  std::string key() const;
};

std::string record_key(std::string_view sample_id, Modality m);

struct Manifest {
  std::vector<SampleRecord> records;
  std::filesystem::path base_dir;

  std::filesystem::path audio_path(const SampleRecord& r) const;
};

/// Throws SchemaError or DuplicateSample.
Manifest parse_manifest(std::string_view csv_text);
Manifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const std::vector<SampleRecord>& records);

/// True when any symptom token names a cough ("cough", "dry_cough", ...).
bool has_cough(const SampleRecord& r);

/// Countries where the virus was not prevalent during collection.
std::set<std::string> default_low_prevalence_countries();

struct CohortConfig {
  std::set<std::string> low_prevalence_countries = default_low_prevalence_countries();
};

struct TaskSpec {
  int task_id = 1;
  std::string positive_filter;
  std::string negative_filter;
  std::set<Modality> modalities;

  /// Task 1: COVID-positive vs healthy non-COVID; Task 2: both with cough;
  /// Task 3: COVID-positive with cough vs asthmatic non-COVID with cough.
  static TaskSpec make(int task_id, std::set<Modality> modalities = {Modality::kCough, Modality::kBreath});

  bool is_positive(const SampleRecord& r, const CohortConfig& cfg) const;
  bool is_negative(const SampleRecord& r, const CohortConfig& cfg) const;
};

/// One session in a cohort. Augmented entries point at their parent session.
struct LabeledSample {
  std::string sample_id;
  std::string user_id;
  int label = 0;
  bool augmented = false;
  std::string parent_id;
  int augment_index = -1;  // 0..5 in augment_six order
};

struct Cohort {
  TaskSpec task;
  std::vector<LabeledSample> samples;  // manifest order

  std::size_t count(int label) const;
  std::set<std::string> users(int label) const;
};

/// Sessions having a record for every modality of the task, labelled by the
/// task filters; others are dropped. Throws EmptyCohort if a class has no users.
Cohort apply_task(const std::vector<SampleRecord>& records, const TaskSpec& spec, const CohortConfig& cfg = {});

struct Fold {
  std::set<std::string> train_users;
  std::set<std::string> test_users;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

/// Independent seeded user partitions, stratified by class at the user level;
/// a user counts as positive if any of their sessions is. Throws TooFewUsers
/// with fewer than two users in a class.
SplitPlan split_users(const Cohort& cohort, std::uint64_t seed, std::size_t n_folds = 10, double test_fraction = 0.2);

/// Session lists of one fold.
struct Partition {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};
Partition partition(const Cohort& cohort, const Fold& fold);

/// Seeded downsampling without replacement of the majority class, keeping
/// input order. The test side is always balanced; the train side only when
/// `balance_train` is set.
Partition balance(const Partition& p, std::uint64_t seed, bool balance_train = true);
std::vector<LabeledSample> downsample_to_balance(const std::vector<LabeledSample>& samples, std::uint64_t seed);

/// Throws std::logic_error if any user appears on both sides or an augmented
/// session sits in the test side.
void assert_disjoint(const Partition& p);

}  // namespace respscreen::dataset
