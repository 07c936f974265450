#include "respscreen/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "parallel.hpp"
#include "respscreen/errors.hpp"
#include "respscreen/io.hpp"
#include "respscreen/rng.hpp"

namespace respscreen::evaluate {

using dataset::LabeledSample;
using dataset::Modality;
using nlohmann::json;

std::string_view to_string(ModalityChoice m) {
  switch (m) {
    case ModalityChoice::kCough: return "cough";
    case ModalityChoice::kBreath: return "breath";
    case ModalityChoice::kCombined: return "combined";
  }
  return "combined";
}

std::string_view to_string(FeatureType f) {
  switch (f) {
    case FeatureType::kHandcrafted: return "handcrafted";
    case FeatureType::kVggish: return "vggish";
    case FeatureType::kCombinedA: return "combined-A";
    case FeatureType::kCombinedB: return "combined-B";
    case FeatureType::kCombinedC: return "combined-C";
  }
  return "handcrafted";
}

ModalityChoice parse_modality_choice(std::string_view s) {
  for (auto m : all_modality_choices()) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("modality must be cough, breath or combined, got '" + std::string(s) + "'");
}

FeatureType parse_feature_type(std::string_view s) {
  for (auto f : all_feature_types()) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("feature type must be handcrafted, vggish, combined-A, combined-B or combined-C, got '" +
                    std::string(s) + "'");
}

std::set<Modality> modalities_of(ModalityChoice m) {
  switch (m) {
    case ModalityChoice::kCough: return {Modality::kCough};
    case ModalityChoice::kBreath: return {Modality::kBreath};
    case ModalityChoice::kCombined: return {Modality::kCough, Modality::kBreath};
  }
  return {};
}

bool needs_embeddings(FeatureType f) { return f != FeatureType::kHandcrafted; }

const std::vector<ModalityChoice>& all_modality_choices() {
  static const std::vector<ModalityChoice> v = {ModalityChoice::kCough, ModalityChoice::kBreath,
                                                ModalityChoice::kCombined};
  return v;
}

const std::vector<FeatureType>& all_feature_types() {
  static const std::vector<FeatureType> v = {FeatureType::kHandcrafted, FeatureType::kVggish, FeatureType::kCombinedA,
                                             FeatureType::kCombinedB, FeatureType::kCombinedC};
  return v;
}

const std::vector<double>& all_pca_cutoffs() {
  static const std::vector<double> v = {0.7, 0.8, 0.9, 0.95};
  return v;
}

model::ClassifierKind RunConfig::resolved_classifier() const {
  if (classifier) return *classifier;
  return task_id == 1 ? model::ClassifierKind::kLogistic : model::ClassifierKind::kSvm;
}

void RunConfig::validate(bool have_embeddings) const {
  if (task_id < 1 || task_id > 3) throw ConfigError("task must be 1, 2 or 3");
  if (!(pca_cutoff > 0.0 && pca_cutoff <= 1.0)) throw ConfigError("PCA cutoff must lie in (0, 1]");
  if (outer_folds == 0 || inner_folds < 2) throw ConfigError("need at least one outer and two inner folds");
  if (!(svm_tolerance > 0.0)) throw ConfigError("SVM tolerance must be positive");
  if (augment && task_id == 1) throw ConfigError("augmentation is only defined for tasks 2 and 3");
  if (augment && feature_type != FeatureType::kHandcrafted) {
    throw ConfigError("augmentation requires the handcrafted feature type");
  }
  if (needs_embeddings(feature_type) && !have_embeddings) {
    throw ConfigError("feature type " + std::string(to_string(feature_type)) +
                      " needs embeddings; pass them with --embeddings");
  }
}

AudioLoader file_loader(const dataset::Manifest& manifest) {
  return [base = manifest.base_dir](const dataset::SampleRecord& r) {
    const std::filesystem::path p(r.audio_path);
    return load_canonical(p.is_absolute() ? p : base / p);
  };
}

AudioLoader memory_loader(std::map<std::string, AudioSegment> audio) {
  auto shared = std::make_shared<const std::map<std::string, AudioSegment>>(std::move(audio));
  return [shared](const dataset::SampleRecord& r) {
    const auto it = shared->find(r.key());
    if (it == shared->end()) throw IoError("no audio for " + r.key());
    return canonicalize(it->second);
  };
}

FeatureStore::FeatureStore(const std::vector<dataset::SampleRecord>& records, AudioLoader loader,
                           embeddings::EmbeddingTable embeddings, features::HandcraftedConfig cfg)
    : loader_(std::move(loader)), embeddings_(std::move(embeddings)), cfg_(std::move(cfg)) {
  for (const auto& r : records) records_.emplace(r.key(), r);
}

const dataset::SampleRecord& FeatureStore::record(const std::string& key) const {
  const auto it = records_.find(key);
  if (it == records_.end()) throw SchemaError("no manifest record for " + key);
  return it->second;
}

void FeatureStore::preload(const std::string& key, const features::HandcraftedVector& v) {
  auto entry = std::make_shared<Entry>();
  entry->values = {v};
  std::lock_guard lock(mutex_);
  cache_[key] = std::move(entry);
}

const FeatureStore::Entry& FeatureStore::lookup(
    const std::string& cache_key, const std::function<std::vector<features::HandcraftedVector>()>& compute) {
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(cache_key);
    if (it != cache_.end()) return *it->second;
  }
  auto entry = std::make_shared<Entry>();
  try {
    ++extractions_;
    entry->values = compute();
  } catch (const IoError&) {
    throw;
  } catch (const Error&) {
    entry->error = std::current_exception();
  }
  std::lock_guard lock(mutex_);
  return *cache_.try_emplace(cache_key, std::move(entry)).first->second;
}

const features::HandcraftedVector& FeatureStore::handcrafted(const std::string& key) {
  const Entry& e = lookup(key, [&] {
    return std::vector<features::HandcraftedVector>{features::extract_handcrafted(loader_(record(key)), cfg_)};
  });
  if (e.error) std::rethrow_exception(e.error);
  return e.values.front();
}

std::vector<double> FeatureStore::record_vector(const std::string& key, FeatureType type) {
  if (type == FeatureType::kHandcrafted) return handcrafted(key).flat();
  const auto it = embeddings_.find(key);
  if (it == embeddings_.end()) throw MalformedEmbeddingFile("no embedding for " + key);
  const auto pooled = embeddings::pool(it->second);
  if (type == FeatureType::kVggish) return {pooled.values.begin(), pooled.values.end()};
  const auto variant = type == FeatureType::kCombinedA   ? embeddings::Variant::kA
                       : type == FeatureType::kCombinedB ? embeddings::Variant::kB
                                                         : embeddings::Variant::kC;
  return embeddings::combine(handcrafted(key), pooled, variant).values;
}

std::vector<double> FeatureStore::augmented_vector(const std::string& key, int index,
                                                   const augment::AugmentConfig& cfg) {
  if (index < 0 || index >= 6) throw std::out_of_range("augmented copy index must lie in [0, 6)");
  const std::string cache_key = key + "#augment/" + std::to_string(cfg.rng_seed);
  const Entry& e = lookup(cache_key, [&] {
    std::vector<features::HandcraftedVector> out;
    for (const auto& copy : augment::augment_six(loader_(record(key)), key, cfg)) {
      out.push_back(features::extract_handcrafted(copy.audio, cfg_));
    }
    return out;
  });
  if (e.error) std::rethrow_exception(e.error);
  return e.values[static_cast<std::size_t>(index)].flat();
}

std::vector<double> session_vector(FeatureStore& store, const std::string& sample_id, ModalityChoice modality,
                                   FeatureType type) {
  std::vector<double> out;
  for (Modality m : modalities_of(modality)) {
    const auto v = store.record_vector(dataset::record_key(sample_id, m), type);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

MetricSummary summarize_metric(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

namespace {

augment::AugmentConfig augment_config(std::uint64_t seed) {
  augment::AugmentConfig a;
  a.rng_seed = derive_seed(seed, "augment");
  return a;
}

std::string augmented_sample_id(const std::string& parent, int index) {
  augment::Provenance p;
  p.method = static_cast<augment::Method>(index / 2);
  p.copy_index = index % 2;
  return augment::augmented_id(parent, p);
}

model::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  const auto cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  model::MatrixXd x(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), cols);
  }
  return x;
}

}  // namespace

namespace {

struct PreparedCohort {
  dataset::Cohort cohort;
  std::map<std::string, std::vector<double>> rows;  // by sample_id
  std::vector<SkippedSample> skipped;
};

// Task cohort with one feature row per session; sessions whose features
// cannot be extracted are dropped and listed.
PreparedCohort prepare(const std::vector<dataset::SampleRecord>& records, FeatureStore& store, const RunConfig& cfg) {
  const auto spec = dataset::TaskSpec::make(cfg.task_id, modalities_of(cfg.modality));
  const auto full = dataset::apply_task(records, spec, cfg.cohort);
  std::vector<std::vector<double>> rows(full.samples.size());
  std::vector<std::string> errors(full.samples.size());
  detail::parallel_for(full.samples.size(), cfg.jobs, [&](std::size_t i) {
    try {
      rows[i] = session_vector(store, full.samples[i].sample_id, cfg.modality, cfg.feature_type);
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  PreparedCohort out;
  out.cohort.task = full.task;
  for (std::size_t i = 0; i < full.samples.size(); ++i) {
    if (!errors[i].empty()) {
      out.skipped.push_back({full.samples[i].sample_id, errors[i]});
      continue;
    }
    out.cohort.samples.push_back(full.samples[i]);
    out.rows.emplace(full.samples[i].sample_id, std::move(rows[i]));
  }
  if (out.cohort.users(1).empty() || out.cohort.users(0).empty()) {
    throw EmptyCohort("no usable sessions left in one class after feature extraction");
  }
  return out;
}

struct TrainingSet {
  model::MatrixXd x;
  model::Labels y;
  std::vector<std::string> groups;
  std::vector<std::string> ids;
  std::vector<bool> validation_mask;  // false for augmented rows
};

// Appends six augmented copies of every negative in `train` when requested.
void add_augmented(std::vector<LabeledSample>& train, const RunConfig& cfg) {
  if (!cfg.augment) return;
  const std::size_t originals = train.size();
  for (std::size_t i = 0; i < originals; ++i) {
    const LabeledSample parent = train[i];
    if (parent.label != 0) continue;
    for (int a = 0; a < 6; ++a) {
      train.push_back({augmented_sample_id(parent.sample_id, a), parent.user_id, 0, true, parent.sample_id, a});
    }
  }
}

TrainingSet training_set(const std::vector<LabeledSample>& train, const PreparedCohort& prepared,
                         FeatureStore& store, const RunConfig& cfg) {
  const auto aug_cfg = augment_config(cfg.seed);
  std::vector<std::vector<double>> rows;
  TrainingSet t;
  for (const auto& s : train) {
    if (s.augmented) {
      std::vector<double> row;
      for (Modality m : modalities_of(cfg.modality)) {
        const auto v = store.augmented_vector(dataset::record_key(s.parent_id, m), s.augment_index, aug_cfg);
        row.insert(row.end(), v.begin(), v.end());
      }
      rows.push_back(std::move(row));
    } else {
      rows.push_back(prepared.rows.at(s.sample_id));
    }
    t.y.push_back(s.label);
    t.groups.push_back(s.user_id);
    t.ids.push_back(s.sample_id);
    t.validation_mask.push_back(!s.augmented);
  }
  t.x = to_matrix(rows);
  return t;
}

model::GridSpec grid_for(const RunConfig& cfg) {
  auto grid = model::GridSpec::for_kind(cfg.resolved_classifier());
  grid.inner_folds = cfg.inner_folds;
  grid.svm_tolerance = cfg.svm_tolerance;
  return grid;
}

}  // namespace

EvaluationReport run_nested_cv(const std::vector<dataset::SampleRecord>& records, FeatureStore& store,
                               const RunConfig& cfg, Observer* observer) {
  cfg.validate(store.has_embeddings());
  EvaluationReport report;
  report.config = cfg;
  report.classifier = cfg.resolved_classifier();

  const PreparedCohort prepared = prepare(records, store, cfg);
  const dataset::Cohort& cohort = prepared.cohort;
  report.skipped = prepared.skipped;
  report.cohort_positive = cohort.count(1);
  report.cohort_negative = cohort.count(0);
  report.positive_users = cohort.users(1).size();
  report.negative_users = cohort.users(0).size();

  const auto plan = dataset::split_users(cohort, cfg.seed, cfg.outer_folds);
  const auto grid = grid_for(cfg);

  std::mutex observer_mutex;
  report.folds.resize(plan.folds.size());
  detail::parallel_for(plan.folds.size(), cfg.jobs, [&](std::size_t f) {
    auto part = dataset::balance(dataset::partition(cohort, plan.folds[f]), derive_seed(cfg.seed, "balance", f),
                                 !cfg.augment);
    add_augmented(part.train, cfg);
    dataset::assert_disjoint(part);
    if (observer) {
      std::lock_guard lock(observer_mutex);
      observer->on_partition(f, part);
    }

    const TrainingSet train = training_set(part.train, prepared, store, cfg);
    const model::FitHook hook = [&](std::span<const std::size_t> rows) {
      if (!observer) return;
      std::vector<std::string> ids;
      for (std::size_t r : rows) ids.push_back(train.ids[r]);
      std::lock_guard lock(observer_mutex);
      observer->on_fit(f, "inner", ids);
    };
    const auto search = model::grid_search(train.x, train.y, train.groups, cfg.pca_cutoff, grid,
                                           derive_seed(cfg.seed, "inner", f), train.validation_mask, hook);
    if (observer) {
      std::lock_guard lock(observer_mutex);
      observer->on_fit(f, "final", train.ids);
    }
    const auto pipeline = model::fit_pipeline(train.x, train.y, cfg.pca_cutoff, search.best, cfg.svm_tolerance);

    std::vector<std::vector<double>> test_rows;
    std::vector<int> y_test;
    for (const auto& s : part.test) {
      test_rows.push_back(prepared.rows.at(s.sample_id));
      y_test.push_back(s.label);
    }
    const model::VectorXd scores = pipeline.score(to_matrix(test_rows));
    const std::span<const double> sv(scores.data(), static_cast<std::size_t>(scores.size()));
    const auto pr = precision_recall(sv, y_test, pipeline.threshold());

    FoldResult& r = report.folds[f];
    r.fold = f;
    r.auc = roc_auc(sv, y_test);
    r.precision = pr.precision;
    r.recall = pr.recall;
    r.precision_undefined = pr.precision_undefined;
    r.hyperparams = search.best;
    r.gamma_value = pipeline.gamma;
    r.pca_k = pipeline.pca.k();
    std::set<std::string> train_users, test_users;
    for (const auto& s : part.train) {
      train_users.insert(s.user_id);
      if (s.augmented) ++r.train_augmented;
      else (s.label ? r.train_positive : r.train_negative)++;
    }
    for (const auto& s : part.test) {
      test_users.insert(s.user_id);
      (s.label ? r.test_positive : r.test_negative)++;
    }
    r.train_users = train_users.size();
    r.test_users = test_users.size();
  });

  std::vector<double> auc, precision, recall;
  for (const auto& r : report.folds) {
    auc.push_back(r.auc);
    precision.push_back(r.precision);
    recall.push_back(r.recall);
  }
  report.auc = summarize_metric(auc);
  report.precision = summarize_metric(precision);
  report.recall = summarize_metric(recall);
  return report;
}

TrainResult train_final(const std::vector<dataset::SampleRecord>& records, FeatureStore& store,
                        const RunConfig& cfg) {
  cfg.validate(store.has_embeddings());
  const PreparedCohort prepared = prepare(records, store, cfg);
  auto train = cfg.augment ? prepared.cohort.samples
                           : dataset::downsample_to_balance(prepared.cohort.samples, derive_seed(cfg.seed, "balance"));
  add_augmented(train, cfg);
  const TrainingSet t = training_set(train, prepared, store, cfg);
  TrainResult out;
  out.grid = model::grid_search(t.x, t.y, t.groups, cfg.pca_cutoff, grid_for(cfg), derive_seed(cfg.seed, "inner"),
                                t.validation_mask);
  out.pipeline = model::fit_pipeline(t.x, t.y, cfg.pca_cutoff, out.grid.best, cfg.svm_tolerance);
  out.skipped = prepared.skipped;
  for (const auto& s : train) {
    if (s.augmented) ++out.augmented;
    else (s.label ? out.positive : out.negative)++;
  }
  return out;
}

namespace {

json config_json(const RunConfig& c) {
  return {{"task", c.task_id},
          {"modality", std::string(to_string(c.modality))},
          {"feature_type", std::string(to_string(c.feature_type))},
          {"pca_cutoff", c.pca_cutoff},
          {"augment", c.augment},
          {"seed", c.seed},
          {"classifier", std::string(model::to_string(c.resolved_classifier()))},
          {"outer_folds", c.outer_folds},
          {"inner_folds", c.inner_folds},
          {"svm_tolerance", c.svm_tolerance},
          {"low_prevalence_countries", c.cohort.low_prevalence_countries}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.task_id = j.at("task").get<int>();
  c.modality = parse_modality_choice(j.at("modality").get<std::string>());
  c.feature_type = parse_feature_type(j.at("feature_type").get<std::string>());
  c.pca_cutoff = j.at("pca_cutoff").get<double>();
  c.augment = j.at("augment").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.classifier = model::parse_classifier(j.at("classifier").get<std::string>());
  c.outer_folds = j.at("outer_folds").get<std::size_t>();
  c.inner_folds = j.at("inner_folds").get<std::size_t>();
  c.svm_tolerance = j.at("svm_tolerance").get<double>();
  c.cohort.low_prevalence_countries = j.at("low_prevalence_countries").get<std::set<std::string>>();
  return c;
}

json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

MetricSummary summary_from_json(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

}  // namespace

std::string EvaluationReport::to_json() const {
  json j;
  j["format"] = "respscreen-report";
  j["version"] = 1;
  j["config"] = config_json(config);
  j["cohort"] = {{"positive_sessions", cohort_positive},
                 {"negative_sessions", cohort_negative},
                 {"positive_users", positive_users},
                 {"negative_users", negative_users}};
  json skipped_json = json::array();
  for (const auto& s : skipped) skipped_json.push_back({{"sample_id", s.sample_id}, {"reason", s.reason}});
  j["skipped"] = skipped_json;
  json folds_json = json::array();
  for (const auto& f : folds) {
    json hp = {{"classifier", std::string(model::to_string(f.hyperparams.kind))}, {"c", f.hyperparams.c}};
    if (f.hyperparams.kind == model::ClassifierKind::kSvm) {
      hp["gamma"] = f.hyperparams.gamma ? json(*f.hyperparams.gamma) : json("scale");
      hp["gamma_value"] = f.gamma_value;
    }
    folds_json.push_back({{"fold", f.fold},
                          {"auc", f.auc},
                          {"precision", f.precision},
                          {"recall", f.recall},
                          {"precision_undefined", f.precision_undefined},
                          {"hyperparameters", hp},
                          {"pca_k", f.pca_k},
                          {"train", {{"positive", f.train_positive},
                                     {"negative", f.train_negative},
                                     {"augmented", f.train_augmented},
                                     {"users", f.train_users}}},
                          {"test", {{"positive", f.test_positive},
                                    {"negative", f.test_negative},
                                    {"users", f.test_users}}}});
  }
  j["folds"] = folds_json;
  j["aggregate"] = {{"auc", summary_json(auc)},
                    {"precision", summary_json(precision)},
                    {"recall", summary_json(recall)}};
  return j.dump(2) + "\n";
}

EvaluationReport EvaluationReport::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "respscreen-report" || j.at("version") != 1) throw SchemaError("not a report file");
    EvaluationReport r;
    r.config = config_from_json(j.at("config"));
    r.classifier = r.config.resolved_classifier();
    const json& c = j.at("cohort");
    r.cohort_positive = c.at("positive_sessions").get<std::size_t>();
    r.cohort_negative = c.at("negative_sessions").get<std::size_t>();
    r.positive_users = c.at("positive_users").get<std::size_t>();
    r.negative_users = c.at("negative_users").get<std::size_t>();
    for (const auto& s : j.at("skipped")) {
      r.skipped.push_back({s.at("sample_id").get<std::string>(), s.at("reason").get<std::string>()});
    }
    for (const auto& fj : j.at("folds")) {
      FoldResult f;
      f.fold = fj.at("fold").get<std::size_t>();
      f.auc = fj.at("auc").get<double>();
      f.precision = fj.at("precision").get<double>();
      f.recall = fj.at("recall").get<double>();
      f.precision_undefined = fj.at("precision_undefined").get<bool>();
      const json& hp = fj.at("hyperparameters");
      f.hyperparams.kind = model::parse_classifier(hp.at("classifier").get<std::string>());
      f.hyperparams.c = hp.at("c").get<double>();
      if (f.hyperparams.kind == model::ClassifierKind::kSvm) {
        if (!hp.at("gamma").is_string()) f.hyperparams.gamma = hp.at("gamma").get<double>();
        f.gamma_value = hp.at("gamma_value").get<double>();
      }
      f.pca_k = fj.at("pca_k").get<std::size_t>();
      f.train_positive = fj.at("train").at("positive").get<std::size_t>();
      f.train_negative = fj.at("train").at("negative").get<std::size_t>();
      f.train_augmented = fj.at("train").at("augmented").get<std::size_t>();
      f.train_users = fj.at("train").at("users").get<std::size_t>();
      f.test_positive = fj.at("test").at("positive").get<std::size_t>();
      f.test_negative = fj.at("test").at("negative").get<std::size_t>();
      f.test_users = fj.at("test").at("users").get<std::size_t>();
      r.folds.push_back(f);
    }
    const json& a = j.at("aggregate");
    r.auc = summary_from_json(a.at("auc"));
    r.precision = summary_from_json(a.at("precision"));
    r.recall = summary_from_json(a.at("recall"));
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string mean_std(const MetricSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f)", s.mean, s.std);
  return buf;
}

}  // namespace

std::string EvaluationReport::summary_table() const {
  char head[256];
  std::snprintf(head, sizeof head, "Task %d | %s | %s | PCA %.2f | %s%s | %zu folds\n", config.task_id,
                std::string(to_string(config.modality)).c_str(), std::string(to_string(config.feature_type)).c_str(),
                config.pca_cutoff, classifier == model::ClassifierKind::kLogistic ? "LR" : "SVM",
                config.augment ? " | augmented" : "", folds.size());
  char body[256];
  std::snprintf(body, sizeof body, "%-12s %-14s %-14s %-14s\n%-12s %-14s %-14s %-14s\n", "", "ROC-AUC", "Precision",
                "Recall", "Mean (std)", mean_std(auc).c_str(), mean_std(precision).c_str(),
                mean_std(recall).c_str());
  char counts[160];
  std::snprintf(counts, sizeof counts, "Cohort: %zu (%zu) positive / %zu (%zu) negative sessions (users)\n",
                cohort_positive, positive_users, cohort_negative, negative_users);
  return std::string(head) + counts + body;
}

std::vector<SweepRow> sweep(const std::vector<dataset::SampleRecord>& records, FeatureStore& store,
                            const RunConfig& base, const SweepOptions& opts, Observer* observer) {
  std::vector<SweepRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto modality : opts.modalities) {
    for (auto type : opts.feature_types) {
      for (double cutoff : opts.cutoffs) {
        SweepRow row;
        row.task_id = base.task_id;
        row.modality = modality;
        row.feature_type = type;
        row.pca_cutoff = cutoff;
        row.auc = row.precision = row.recall = {nan, nan};
        RunConfig cfg = base;
        cfg.modality = modality;
        cfg.feature_type = type;
        cfg.pca_cutoff = cutoff;
        if (needs_embeddings(type) && !store.has_embeddings()) {
          row.status = "skipped: no embeddings";
        } else if (cfg.augment && type != FeatureType::kHandcrafted) {
          row.status = "skipped: augmentation needs handcrafted features";
        } else {
          try {
            const auto report = run_nested_cv(records, store, cfg, observer);
            row.auc = report.auc;
            row.precision = report.precision;
            row.recall = report.recall;
            row.status = "ok";
          } catch (const Error& e) {
            row.status = std::string("failed: ") + e.what();
          }
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace {

const std::vector<std::string> kSweepColumns = {"task",           "modality",      "feature_type", "pca_cutoff",
                                                "auc_mean",       "auc_std",       "precision_mean",
                                                "precision_std",  "recall_mean",   "recall_std",   "status"};

std::string number(double v) { return std::isnan(v) ? "" : format_double(v, 17); }

double parse_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw SchemaError("bad number '" + s + "' in sweep file");
  }
  if (used != s.size()) throw SchemaError("bad number '" + s + "' in sweep file");
  return v;
}

}  // namespace

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = csv_line(kSweepColumns);
  for (const auto& r : rows) {
    out += csv_line({std::to_string(r.task_id), std::string(to_string(r.modality)),
                     std::string(to_string(r.feature_type)), format_double(r.pca_cutoff, 17), number(r.auc.mean),
                     number(r.auc.std), number(r.precision.mean), number(r.precision.std), number(r.recall.mean),
                     number(r.recall.std), r.status});
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(std::string_view text) {
  CsvTable t;
  try {
    t = parse_csv(text);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  if (t.header != kSweepColumns) throw SchemaError("sweep file has unexpected columns");
  std::vector<SweepRow> rows;
  for (const auto& c : t.rows) {
    SweepRow r;
    r.task_id = static_cast<int>(parse_number(c[0]));
    try {
      r.modality = parse_modality_choice(c[1]);
      r.feature_type = parse_feature_type(c[2]);
    } catch (const ConfigError& e) {
      throw SchemaError(e.what());
    }
    r.pca_cutoff = parse_number(c[3]);
    r.auc = {parse_number(c[4]), parse_number(c[5])};
    r.precision = {parse_number(c[6]), parse_number(c[7])};
    r.recall = {parse_number(c[8]), parse_number(c[9])};
    r.status = c[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace respscreen::evaluate
