#include "respscreen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "respscreen/errors.hpp"
#include "respscreen/io.hpp"
#include "respscreen/rng.hpp"

namespace respscreen::dataset {

namespace {

const std::vector<std::string> kManifestColumns = {
    "sample_id", "user_id", "modality", "audio_path", "covid_tested_positive", "symptoms",
    "medical_history", "smoker", "country", "collected_at"};

std::set<std::string> split_tokens(const std::string& s) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(';', start), s.size());
    std::string tok = s.substr(start, end - start);
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    if (!tok.empty()) out.insert(tok);
    start = end + 1;
  }
  return out;
}

std::string join_tokens(const std::set<std::string>& s) {
  std::string out;
  for (const auto& t : s) {
    if (!out.empty()) out.push_back(';');
    out += t;
  }
  return out;
}

bool parse_bool(const std::string& s, std::size_t row) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw SchemaError("row " + std::to_string(row) + ": covid_tested_positive must be true/false, got '" + s + "'");
}

}  // namespace

std::string_view to_string(Modality m) { return m == Modality::kCough ? "cough" : "breath"; }

std::string_view to_string(Smoker s) {
  switch (s) {
    case Smoker::kNever: return "never";
    case Smoker::kEx: return "ex";
    case Smoker::kCurrent: return "current";
    case Smoker::kUnknown: return "unknown";
  }
  return "unknown";
}

Modality parse_modality(std::string_view s) {
  if (s == "cough") return Modality::kCough;
  if (s == "breath") return Modality::kBreath;
  throw SchemaError("unknown modality '" + std::string(s) + "'");
}

Smoker parse_smoker(std::string_view s) {
  if (s == "never") return Smoker::kNever;
  if (s == "ex") return Smoker::kEx;
  if (s == "current") return Smoker::kCurrent;
  if (s == "unknown" || s.empty()) return Smoker::kUnknown;
  throw SchemaError("unknown smoker status '" + std::string(s) + "'");
}

std::string record_key(std::string_view sample_id, Modality m) {
  return std::string(sample_id) + "@" + std::string(to_string(m));
}

std::string SampleRecord::key() const { return record_key(sample_id, modality); }

std::filesystem::path Manifest::audio_path(const SampleRecord& r) const {
  std::filesystem::path p(r.audio_path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(std::string_view csv_text) {
  CsvTable csv;
  try {
    csv = parse_csv(csv_text);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  std::vector<int> col(kManifestColumns.size());
  for (std::size_t i = 0; i < kManifestColumns.size(); ++i) {
    col[i] = csv.column(kManifestColumns[i]);
    if (col[i] < 0) throw SchemaError("manifest lacks column '" + kManifestColumns[i] + "'");
  }

  Manifest m;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    auto at = [&](std::size_t i) -> const std::string& { return row[static_cast<std::size_t>(col[i])]; };
    const std::size_t line = r + 2;
    SampleRecord rec;
    rec.sample_id = at(0);
    rec.user_id = at(1);
    if (rec.sample_id.empty()) throw SchemaError("row " + std::to_string(line) + ": empty sample_id");
    if (rec.user_id.empty()) throw SchemaError("row " + std::to_string(line) + ": empty user_id");
    if (rec.sample_id.find('@') != std::string::npos || rec.sample_id.find('#') != std::string::npos) {
      throw SchemaError("row " + std::to_string(line) + ": sample_id may not contain '@' or '#'");
    }
    try {
      rec.modality = parse_modality(at(2));
      rec.smoker = parse_smoker(at(7));
    } catch (const SchemaError& e) {
      throw SchemaError("row " + std::to_string(line) + ": " + e.what());
    }
    rec.audio_path = at(3);
    rec.covid_tested_positive = parse_bool(at(4), line);
    rec.symptoms = split_tokens(at(5));
    rec.medical_history = split_tokens(at(6));
    rec.country = at(8);
    rec.collected_at = at(9);
    if (!seen.insert(rec.key()).second) {
      throw DuplicateSample("row " + std::to_string(line) + ": duplicate (sample_id, modality) " + rec.key());
    }
    m.records.push_back(std::move(rec));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m = parse_manifest(read_file_text(path));
  m.base_dir = path.parent_path();
  return m;
}

std::string format_manifest(const std::vector<SampleRecord>& records) {
  std::string out = csv_line(kManifestColumns);
  for (const auto& r : records) {
    out += csv_line({r.sample_id, r.user_id, std::string(to_string(r.modality)), r.audio_path,
                     r.covid_tested_positive ? "true" : "false", join_tokens(r.symptoms),
                     join_tokens(r.medical_history), std::string(to_string(r.smoker)), r.country, r.collected_at});
  }
  return out;
}

bool has_cough(const SampleRecord& r) {
  return std::any_of(r.symptoms.begin(), r.symptoms.end(),
                     [](const std::string& s) { return s.find("cough") != std::string::npos; });
}

std::set<std::string> default_low_prevalence_countries() {
  // Albania, Bulgaria, Cyprus, Greece, Jordan, Lebanon, Sri Lanka, Tunisia, Vietnam.
  return {"AL", "BG", "CY", "GR", "JO", "LB", "LK", "TN", "VN"};
}

TaskSpec TaskSpec::make(int task_id, std::set<Modality> modalities) {
  if (modalities.empty()) throw ConfigError("a task needs at least one modality");
  TaskSpec t;
  t.task_id = task_id;
  t.modalities = std::move(modalities);
  switch (task_id) {
    case 1:
      t.positive_filter = "tested positive";
      t.negative_filter =
          "not tested positive, clean medical history, never smoked, no symptoms, low-prevalence country";
      break;
    case 2:
      t.positive_filter = "tested positive, cough";
      t.negative_filter =
          "not tested positive, clean medical history, never smoked, low-prevalence country, cough";
      break;
    case 3:
      t.positive_filter = "tested positive, cough";
      t.negative_filter = "not tested positive, low-prevalence country, asthma, cough";
      break;
    default:
      throw ConfigError("task must be 1, 2 or 3, got " + std::to_string(task_id));
  }
  return t;
}

bool TaskSpec::is_positive(const SampleRecord& r, const CohortConfig&) const {
  if (!r.covid_tested_positive) return false;
  return task_id == 1 || has_cough(r);
}

bool TaskSpec::is_negative(const SampleRecord& r, const CohortConfig& cfg) const {
  if (r.covid_tested_positive) return false;
  if (!cfg.low_prevalence_countries.contains(r.country)) return false;
  switch (task_id) {
    case 1:
      return r.medical_history.empty() && r.smoker == Smoker::kNever && r.symptoms.empty();
    case 2:
      return r.medical_history.empty() && r.smoker == Smoker::kNever && has_cough(r);
    case 3:
      return r.medical_history.contains("asthma") && has_cough(r);
  }
  return false;
}

std::size_t Cohort::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [label](const LabeledSample& s) { return s.label == label; }));
}

std::set<std::string> Cohort::users(int label) const {
  std::set<std::string> u;
  for (const auto& s : samples) {
    if (s.label == label) u.insert(s.user_id);
  }
  return u;
}

Cohort apply_task(const std::vector<SampleRecord>& records, const TaskSpec& spec, const CohortConfig& cfg) {
  // Group by session, preserving first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SampleRecord*>> sessions;
  for (const auto& r : records) {
    if (!spec.modalities.contains(r.modality)) continue;
    auto [it, inserted] = sessions.try_emplace(r.sample_id);
    if (inserted) order.push_back(r.sample_id);
    it->second.push_back(&r);
  }

  Cohort cohort;
  cohort.task = spec;
  for (const auto& id : order) {
    const auto& recs = sessions[id];
    if (recs.size() != spec.modalities.size()) continue;
    // All modalities of a session must agree on the label and user.
    int label = -1;
    bool consistent = true;
    for (const SampleRecord* r : recs) {
      const bool pos = spec.is_positive(*r, cfg);
      const bool neg = spec.is_negative(*r, cfg);
      const int l = pos ? 1 : neg ? 0 : -2;
      if (label == -1) label = l;
      if (l != label || r->user_id != recs.front()->user_id) consistent = false;
    }
    if (!consistent || label < 0) continue;
    cohort.samples.push_back({id, recs.front()->user_id, label, false, "", -1});
  }
  if (cohort.users(1).empty()) throw EmptyCohort("task " + std::to_string(spec.task_id) + " has no positive users");
  if (cohort.users(0).empty()) throw EmptyCohort("task " + std::to_string(spec.task_id) + " has no negative users");
  return cohort;
}

SplitPlan split_users(const Cohort& cohort, std::uint64_t seed, std::size_t n_folds, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  const auto positive_users = cohort.users(1);
  std::vector<std::string> pos(positive_users.begin(), positive_users.end());
  std::vector<std::string> neg;
  for (const auto& u : cohort.users(0)) {
    if (!positive_users.contains(u)) neg.push_back(u);
  }
  if (pos.size() < 2 || neg.size() < 2) {
    throw TooFewUsers("need at least 2 users per class, have " + std::to_string(pos.size()) + " positive and " +
                      std::to_string(neg.size()) + " negative");
  }

  auto n_test = [test_fraction](std::size_t n) {
    const auto k = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n - 1);
  };

  SplitPlan plan;
  plan.seed = seed;
  for (std::size_t f = 0; f < n_folds; ++f) {
    Rng rng(derive_seed(seed, "outer-split", f));
    Fold fold;
    for (auto* group : {&pos, &neg}) {
      std::vector<std::string> users = *group;
      rng.shuffle(users);
      const std::size_t k = n_test(users.size());
      fold.test_users.insert(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(k));
      fold.train_users.insert(users.begin() + static_cast<std::ptrdiff_t>(k), users.end());
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

Partition partition(const Cohort& cohort, const Fold& fold) {
  Partition p;
  for (const auto& s : cohort.samples) {
    if (fold.test_users.contains(s.user_id)) {
      p.test.push_back(s);
    } else if (fold.train_users.contains(s.user_id)) {
      p.train.push_back(s);
    }
  }
  return p;
}

std::vector<LabeledSample> downsample_to_balance(const std::vector<LabeledSample>& samples, std::uint64_t seed) {
  std::vector<std::size_t> idx[2];
  for (std::size_t i = 0; i < samples.size(); ++i) idx[samples[i].label == 1 ? 1 : 0].push_back(i);
  const std::size_t target = std::min(idx[0].size(), idx[1].size());
  std::vector<bool> keep(samples.size(), true);
  for (auto& group : idx) {
    if (group.size() <= target) continue;
    Rng rng(seed);
    std::vector<std::size_t> shuffled = group;
    rng.shuffle(shuffled);
    for (std::size_t i = target; i < shuffled.size(); ++i) keep[shuffled[i]] = false;
  }
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (keep[i]) out.push_back(samples[i]);
  }
  return out;
}

Partition balance(const Partition& p, std::uint64_t seed, bool balance_train) {
  Partition out;
  out.test = downsample_to_balance(p.test, derive_seed(seed, "balance-test"));
  out.train = balance_train ? downsample_to_balance(p.train, derive_seed(seed, "balance-train")) : p.train;
  return out;
}

void assert_disjoint(const Partition& p) {
  std::set<std::string> train_users;
  for (const auto& s : p.train) train_users.insert(s.user_id);
  for (const auto& s : p.test) {
    if (train_users.contains(s.user_id)) throw std::logic_error("user " + s.user_id + " is in both train and test");
    if (s.augmented) throw std::logic_error("augmented sample " + s.sample_id + " in a test partition");
  }
}

}  // namespace respscreen::dataset
