#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "respscreen/augment.hpp"
#include "respscreen/dataset.hpp"
#include "respscreen/embeddings.hpp"
#include "respscreen/features.hpp"
#include "respscreen/metrics.hpp"
#include "respscreen/model.hpp"

namespace respscreen::evaluate {

enum class ModalityChoice { kCough, kBreath, kCombined };
enum class FeatureType { kHandcrafted, kVggish, kCombinedA, kCombinedB, kCombinedC };

std::string_view to_string(ModalityChoice m);
std::string_view to_string(FeatureType f);
ModalityChoice parse_modality_choice(std::string_view s);  // throws ConfigError
FeatureType parse_feature_type(std::string_view s);        // throws ConfigError
std::set<dataset::Modality> modalities_of(ModalityChoice m);
bool needs_embeddings(FeatureType f);

const std::vector<ModalityChoice>& all_modality_choices();
const std::vector<FeatureType>& all_feature_types();
const std::vector<double>& all_pca_cutoffs();

struct RunConfig {
  int task_id = 1;
  ModalityChoice modality = ModalityChoice::kCombined;
  FeatureType feature_type = FeatureType::kHandcrafted;
  double pca_cutoff = 0.9;
  bool augment = false;
  std::uint64_t seed = 0;
  /// LR for Task 1 and SVM otherwise when unset.
  std::optional<model::ClassifierKind> classifier;
  std::size_t outer_folds = 10;
  std::size_t inner_folds = 5;
  double svm_tolerance = 1e-3;
  dataset::CohortConfig cohort;
  /// Worker threads; results do not depend on it.
  std::size_t jobs = 1;

  model::ClassifierKind resolved_classifier() const;
  /// Throws ConfigError on inconsistent settings.
  void validate(bool have_embeddings) const;
};

/// Loads canonical (resampled, trimmed) audio for a record.
using AudioLoader = std::function<AudioSegment(const dataset::SampleRecord&)>;
AudioLoader file_loader(const dataset::Manifest& manifest);
AudioLoader memory_loader(std::map<std::string, AudioSegment> audio);

/// Thread-safe cache of per-recording features. Extraction failures are
/// cached too and rethrown on every request; IoError is never cached.
class FeatureStore {
 public:
  FeatureStore(const std::vector<dataset::SampleRecord>& records, AudioLoader loader,
               embeddings::EmbeddingTable embeddings = {}, features::HandcraftedConfig cfg = {});

  bool has_embeddings() const { return !embeddings_.empty(); }
  void preload(const std::string& key, const features::HandcraftedVector& v);

  const features::HandcraftedVector& handcrafted(const std::string& key);
  std::vector<double> record_vector(const std::string& key, FeatureType type);
  /// Handcrafted features of augmented copy `index` (augment_six order).
  std::vector<double> augmented_vector(const std::string& key, int index, const augment::AugmentConfig& cfg);

  /// Number of audio feature extractions performed (cache misses).
  std::size_t extractions() const { return extractions_.load(); }

 private:
  struct Entry {
    std::vector<features::HandcraftedVector> values;
    std::exception_ptr error;
  };
  const Entry& lookup(const std::string& cache_key,
                      const std::function<std::vector<features::HandcraftedVector>()>& compute);
  const dataset::SampleRecord& record(const std::string& key) const;

  std::map<std::string, dataset::SampleRecord> records_;
  AudioLoader loader_;
  embeddings::EmbeddingTable embeddings_;
  features::HandcraftedConfig cfg_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> cache_;
  std::atomic<std::size_t> extractions_{0};
};

/// Feature row of a session: the per-modality vectors concatenated in
/// cough, breath order.
std::vector<double> session_vector(FeatureStore& store, const std::string& sample_id, ModalityChoice modality,
                                   FeatureType type);

/// Instrumentation hooks. Calls are serialized by the caller.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void on_partition(std::size_t /*fold*/, const dataset::Partition& /*p*/) {}
  /// `stage` is "inner" for grid-search fits and "final" for the refit.
  virtual void on_fit(std::size_t /*fold*/, std::string_view /*stage*/, const std::vector<std::string>& /*ids*/) {}
};

struct FoldResult {
  std::size_t fold = 0;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool precision_undefined = false;
  model::Hyperparams hyperparams;
  double gamma_value = 0.0;
  std::size_t pca_k = 0;
  std::size_t train_positive = 0, train_negative = 0, train_augmented = 0;
  std::size_t test_positive = 0, test_negative = 0;
  std::size_t train_users = 0, test_users = 0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
};
MetricSummary summarize_metric(const std::vector<double>& values);

struct SkippedSample {
  std::string sample_id;
  std::string reason;
};

struct EvaluationReport {
  RunConfig config;
  model::ClassifierKind classifier = model::ClassifierKind::kLogistic;
  std::size_t cohort_positive = 0, cohort_negative = 0;
  std::size_t positive_users = 0, negative_users = 0;
  std::vector<SkippedSample> skipped;
  std::vector<FoldResult> folds;
  MetricSummary auc, precision, recall;

  std::string to_json() const;
  static EvaluationReport from_json(std::string_view text);
  /// Mean (std) per metric, laid out like the published results tables.
  std::string summary_table() const;
};

/// Nested cross-validation: per outer fold, balance the test side, optionally
/// add six augmented copies of every training negative, grid-search and fit
/// the pipeline on training rows only, score the untouched test rows.
/// Sessions whose features cannot be extracted are dropped and listed.
EvaluationReport run_nested_cv(const std::vector<dataset::SampleRecord>& records, FeatureStore& store,
                               const RunConfig& cfg, Observer* observer = nullptr);

struct TrainResult {
  model::Pipeline pipeline;
  model::GridResult grid;
  std::size_t positive = 0, negative = 0, augmented = 0;
  std::vector<SkippedSample> skipped;
};

/// Grid search and fit on the whole task cohort (balanced, or with augmented
/// negatives), for deployment rather than evaluation.
TrainResult train_final(const std::vector<dataset::SampleRecord>& records, FeatureStore& store, const RunConfig& cfg);

struct SweepRow {
  int task_id = 1;
  ModalityChoice modality = ModalityChoice::kCombined;
  FeatureType feature_type = FeatureType::kHandcrafted;
  double pca_cutoff = 0.9;
  MetricSummary auc, precision, recall;
  std::string status;  // "ok", "skipped: ...", or "failed: ..."
};

struct SweepOptions {
  std::vector<ModalityChoice> modalities = all_modality_choices();
  std::vector<double> cutoffs = all_pca_cutoffs();
  std::vector<FeatureType> feature_types = all_feature_types();
};

/// One row per modality x feature type x cutoff, in that nesting order.
/// Cells needing absent embeddings are marked skipped; failing cells are
/// recorded and the sweep continues.
std::vector<SweepRow> sweep(const std::vector<dataset::SampleRecord>& records, FeatureStore& store,
                            const RunConfig& base, const SweepOptions& opts = {}, Observer* observer = nullptr);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(std::string_view text);  // throws SchemaError

}  // namespace respscreen::evaluate
