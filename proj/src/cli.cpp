#include "respscreen/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "parallel.hpp"
#include "respscreen/augment.hpp"
#include "respscreen/dataset.hpp"
#include "respscreen/embeddings.hpp"
#include "respscreen/errors.hpp"
#include "respscreen/evaluate.hpp"
#include "respscreen/features.hpp"
#include "respscreen/io.hpp"
#include "respscreen/rng.hpp"
#include "respscreen/synth.hpp"

namespace respscreen::cli {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string manifest;
  std::string features;
  std::string embeddings;
  std::string out;
  int task = 1;
  std::string modality = "combined";
  std::string feature_type = "handcrafted";
  double pca_cutoff = 0.9;
  std::string classifier;
  bool augment = false;
  std::uint64_t seed = 0;
  std::size_t outer_folds = 10;
  std::vector<std::string> countries;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_cutoff) {
  cmd->add_option("--manifest", o.manifest, "Manifest CSV")->required();
  cmd->add_option("--features", o.features, "Precomputed handcrafted feature CSV (from extract)");
  cmd->add_option("--embeddings", o.embeddings, "Embedding CSV; required by vggish and combined-* feature types");
  cmd->add_option("--task", o.task, "Task 1, 2 or 3")->capture_default_str();
  if (with_cutoff) {
    cmd->add_option("--modality", o.modality, "cough, breath or combined")->capture_default_str();
    cmd->add_option("--feature-type", o.feature_type, "handcrafted, vggish, combined-A, combined-B or combined-C")
        ->capture_default_str();
    cmd->add_option("--pca-cutoff", o.pca_cutoff, "Explained-variance cutoff")->capture_default_str();
  }
  cmd->add_option("--classifier", o.classifier, "lr or svm (default: lr for task 1, svm otherwise)");
  cmd->add_flag("--augment,!--no-augment", o.augment, "Add six augmented copies of each training negative");
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--outer-folds", o.outer_folds, "Outer user splits")->capture_default_str();
  cmd->add_option("--countries", o.countries, "Low-prevalence country codes for negative cohorts")->delimiter(',');
}

evaluate::RunConfig to_config(const RunOptions& o, std::size_t jobs) {
  evaluate::RunConfig c;
  c.task_id = o.task;
  c.modality = evaluate::parse_modality_choice(o.modality);
  c.feature_type = evaluate::parse_feature_type(o.feature_type);
  c.pca_cutoff = o.pca_cutoff;
  c.augment = o.augment;
  c.seed = o.seed;
  if (!o.classifier.empty()) c.classifier = model::parse_classifier(o.classifier);
  c.outer_folds = o.outer_folds;
  c.jobs = jobs;
  if (!o.countries.empty()) c.cohort.low_prevalence_countries = {o.countries.begin(), o.countries.end()};
  return c;
}

void load_feature_csv(const fs::path& path, evaluate::FeatureStore& store) {
  CsvTable t;
  try {
    t = parse_csv(read_file_text(path));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  const auto& names = features::HandcraftedVector::names();
  if (t.header.size() != names.size() + 1 || t.header[0] != "sample_id" ||
      !std::equal(names.begin(), names.end(), t.header.begin() + 1)) {
    throw SchemaError(path.string() + ": not a handcrafted feature file");
  }
  for (const auto& row : t.rows) {
    std::vector<double> v;
    for (std::size_t i = 1; i < row.size(); ++i) {
      try {
        v.push_back(std::stod(row[i]));
      } catch (const std::exception&) {
        throw SchemaError(path.string() + ": bad number '" + row[i] + "'");
      }
    }
    store.preload(row[0], features::HandcraftedVector::from_flat(v));
  }
}

struct Loaded {
  dataset::Manifest manifest;
  std::unique_ptr<evaluate::FeatureStore> store;
};

Loaded load_inputs(const RunOptions& o) {
  Loaded l;
  l.manifest = dataset::load_manifest(o.manifest);
  embeddings::EmbeddingTable emb;
  if (!o.embeddings.empty()) emb = embeddings::load_embeddings(o.embeddings);
  l.store = std::make_unique<evaluate::FeatureStore>(l.manifest.records, evaluate::file_loader(l.manifest),
                                                     std::move(emb));
  if (!o.features.empty()) load_feature_csv(o.features, *l.store);
  return l;
}

std::string skip_log(const std::vector<evaluate::SkippedSample>& skipped) {
  std::string s = csv_line({"sample_id", "reason"});
  for (const auto& k : skipped) s += csv_line({k.sample_id, k.reason});
  return s;
}

void parse_group(const std::string& text, synth::GroupSpec& g) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    g.users = std::stoul(text.substr(0, colon), &used);
    g.sessions = std::stoul(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("group sizes are written USERS:SESSIONS, got '" + text + "'");
  }
}

// --- subcommands ---------------------------------------------------------

struct SynthOptions {
  std::string out;
  std::uint64_t seed = 0;
  std::string preset = "standard";
  std::string positive, healthy, healthy_cough, asthma_cough, distractor;
  std::optional<std::size_t> incomplete;
  std::optional<double> duration, cough_fraction, positive_hz, negative_hz;
  std::optional<int> sample_rate;
  bool scramble = false;
  bool embeddings = false;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  synth::SynthConfig cfg;
  if (o.preset == "all-tasks") {
    cfg = synth::all_tasks_config(o.seed);
  } else if (o.preset != "standard") {
    throw ConfigError("preset must be standard or all-tasks");
  }
  cfg.seed = o.seed;
  if (!o.positive.empty()) parse_group(o.positive, cfg.positive);
  if (!o.healthy.empty()) parse_group(o.healthy, cfg.healthy);
  if (!o.healthy_cough.empty()) parse_group(o.healthy_cough, cfg.healthy_cough);
  if (!o.asthma_cough.empty()) parse_group(o.asthma_cough, cfg.asthma_cough);
  if (!o.distractor.empty()) parse_group(o.distractor, cfg.distractor);
  if (o.incomplete) cfg.incomplete_sessions = *o.incomplete;
  if (o.duration) cfg.duration_s = *o.duration;
  if (o.cough_fraction) cfg.positive_cough_fraction = *o.cough_fraction;
  if (o.positive_hz) cfg.positive_hz = *o.positive_hz;
  if (o.negative_hz) cfg.negative_hz = *o.negative_hz;
  if (o.sample_rate) cfg.sample_rate = *o.sample_rate;
  cfg.scramble = o.scramble;
  cfg.embeddings = o.embeddings;
  const auto cohort = synth::generate(cfg);
  synth::write(cohort, o.out);
  std::set<std::string> users;
  for (const auto& r : cohort.records) users.insert(r.user_id);
  out << "wrote " << cohort.records.size() << " recordings from " << users.size() << " users to "
      << (fs::path(o.out) / "manifest.csv").string() << "\n";
  return kExitOk;
}

std::string format_feature_row(const std::string& id, const std::vector<double>& v) {
  std::string line = csv_escape(id);
  for (double x : v) {
    line.push_back(',');
    line += format_double(x, 9);
  }
  line.push_back('\n');
  return line;
}

struct ExtractOptions {
  std::string manifest;
  std::string out;
  std::string skip_log;
};

int cmd_extract(const ExtractOptions& o, std::size_t jobs, std::ostream& out, std::ostream& err) {
  const auto manifest = dataset::load_manifest(o.manifest);
  auto records = manifest.records;
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  const auto loader = evaluate::file_loader(manifest);
  std::vector<std::vector<double>> rows(records.size());
  std::vector<std::string> errors(records.size());
  detail::parallel_for(records.size(), jobs, [&](std::size_t i) {
    try {
      rows[i] = features::extract_handcrafted(loader(records[i])).flat();
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  std::vector<std::pair<std::string, std::vector<double>>> ok;
  std::vector<evaluate::SkippedSample> skipped;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (errors[i].empty()) ok.emplace_back(records[i].key(), std::move(rows[i]));
    else skipped.push_back({records[i].key(), errors[i]});
  }
  const fs::path log = o.skip_log.empty() ? fs::path(o.out + ".skipped.csv") : fs::path(o.skip_log);
  write_file_atomic(o.out, format_feature_csv(ok));
  write_file_atomic(log, skip_log(skipped));
  out << "extracted " << ok.size() << " of " << records.size() << " recordings to " << o.out << "\n";
  if (!skipped.empty()) err << skipped.size() << " recordings skipped; reasons in " << log.string() << "\n";
  return kExitOk;
}

struct AugmentOptions {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  int task = 0;
};

int cmd_augment(const AugmentOptions& o, std::size_t jobs, std::ostream& out, std::ostream& err) {
  const auto manifest = dataset::load_manifest(o.manifest);
  std::vector<dataset::SampleRecord> records;
  if (o.task == 0) {
    records = manifest.records;
  } else {
    if (o.task == 1) throw ConfigError("augmentation is only defined for tasks 2 and 3");
    const auto cohort = dataset::apply_task(manifest.records, dataset::TaskSpec::make(o.task));
    std::set<std::string> negatives;
    for (const auto& s : cohort.samples) {
      if (s.label == 0) negatives.insert(s.sample_id);
    }
    for (const auto& r : manifest.records) {
      if (negatives.contains(r.sample_id)) records.push_back(r);
    }
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });

  augment::AugmentConfig cfg;
  cfg.rng_seed = derive_seed(o.seed, "augment");
  const auto loader = evaluate::file_loader(manifest);
  std::vector<std::vector<augment::AugmentedCopy>> copies(records.size());
  std::vector<std::string> errors(records.size());
  detail::parallel_for(records.size(), jobs, [&](std::size_t i) {
    try {
      copies[i] = augment::augment_six(loader(records[i]), records[i].key(), cfg);
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create " + o.out + ": " + ec.message());
  std::string provenance = csv_line({"sample_id", "parent_id", "method", "parameter", "seed"});
  std::vector<evaluate::SkippedSample> skipped;
  std::size_t written = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!errors[i].empty()) {
      skipped.push_back({records[i].key(), errors[i]});
      continue;
    }
    for (const auto& c : copies[i]) {
      const std::string id = augment::augmented_id(records[i].key(), c.provenance);
      write_wav(fs::path(o.out) / (id + ".wav"), c.audio);
      provenance += csv_line({id, records[i].key(), std::string(augment::to_string(c.provenance.method)),
                              format_double(c.provenance.parameter, 17), std::to_string(c.provenance.seed)});
      ++written;
    }
  }
  write_file_atomic(fs::path(o.out) / "provenance.csv", provenance);
  write_file_atomic(fs::path(o.out) / "skipped.csv", skip_log(skipped));
  out << "wrote " << written << " augmented recordings for " << records.size() - skipped.size() << " originals to "
      << o.out << "\n";
  if (!skipped.empty()) err << skipped.size() << " recordings skipped\n";
  return kExitOk;
}

int cmd_train(const RunOptions& o, std::size_t jobs, std::ostream& out, std::ostream& err) {
  const auto cfg = to_config(o, jobs);
  cfg.validate(!o.embeddings.empty());
  auto in = load_inputs(o);
  const auto result = evaluate::train_final(in.manifest.records, *in.store, cfg);
  write_file_atomic(o.out, result.pipeline.to_json());
  out << "trained " << result.grid.best.label() << " on " << result.positive << " positive / " << result.negative
      << " negative sessions";
  if (result.augmented) out << " + " << result.augmented << " augmented";
  out << "; PCA keeps " << result.pipeline.pca.k() << " components; model written to " << o.out << "\n";
  if (!result.skipped.empty()) err << result.skipped.size() << " sessions skipped during extraction\n";
  return kExitOk;
}

int cmd_evaluate(const RunOptions& o, std::size_t jobs, std::ostream& out, std::ostream& err) {
  const auto cfg = to_config(o, jobs);
  cfg.validate(!o.embeddings.empty());
  auto in = load_inputs(o);
  const auto report = evaluate::run_nested_cv(in.manifest.records, *in.store, cfg);
  write_file_atomic(o.out, report.to_json());
  out << report.summary_table();
  if (!report.skipped.empty()) err << report.skipped.size() << " sessions skipped during extraction\n";
  return kExitOk;
}

struct SweepExtra {
  std::vector<std::string> modalities;
  std::vector<std::string> feature_types;
  std::vector<double> cutoffs;
};

int cmd_sweep(const RunOptions& o, const SweepExtra& x, std::size_t jobs, std::ostream& out) {
  auto cfg = to_config(o, jobs);
  evaluate::SweepOptions opts;
  if (!x.modalities.empty()) {
    opts.modalities.clear();
    for (const auto& m : x.modalities) opts.modalities.push_back(evaluate::parse_modality_choice(m));
  }
  if (!x.feature_types.empty()) {
    opts.feature_types.clear();
    for (const auto& f : x.feature_types) opts.feature_types.push_back(evaluate::parse_feature_type(f));
  }
  if (!x.cutoffs.empty()) opts.cutoffs = x.cutoffs;
  for (double c : opts.cutoffs) {
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("PCA cutoffs must lie in (0, 1]");
  }
  if (cfg.task_id < 1 || cfg.task_id > 3) throw ConfigError("task must be 1, 2 or 3");
  if (cfg.augment && cfg.task_id == 1) throw ConfigError("augmentation is only defined for tasks 2 and 3");
  auto in = load_inputs(o);
  const auto rows = evaluate::sweep(in.manifest.records, *in.store, cfg, opts);
  write_file_atomic(o.out, evaluate::format_sweep_csv(rows));
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-12s %-6s %-13s %-13s %-13s %s\n", "modality", "features", "PCA", "ROC-AUC",
                "Precision", "Recall", "status");
  out << line;
  for (const auto& r : rows) {
    auto ms = [](const evaluate::MetricSummary& s) {
      if (std::isnan(s.mean)) return std::string("-");
      char b[32];
      std::snprintf(b, sizeof b, "%.2f (%.2f)", s.mean, s.std);
      return std::string(b);
    };
    std::snprintf(line, sizeof line, "%-9s %-12s %-6.2f %-13s %-13s %-13s %s\n",
                  std::string(evaluate::to_string(r.modality)).c_str(),
                  std::string(evaluate::to_string(r.feature_type)).c_str(), r.pca_cutoff, ms(r.auc).c_str(),
                  ms(r.precision).c_str(), ms(r.recall).c_str(), r.status.c_str());
    out << line;
  }
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const EmptyCohort*>(&e) || dynamic_cast<const TooFewUsers*>(&e)) return kExitEmptyCohort;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const MalformedWav*>(&e) ||
      dynamic_cast<const UnsupportedEncoding*>(&e) || dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const DuplicateSample*>(&e) || dynamic_cast<const MalformedEmbeddingFile*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const ModelFormatError*>(&e)) {
    return kExitIo;
  }
  return kExitFailure;
}

}  // namespace

std::string format_feature_csv(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::vector<std::string> header = {"sample_id"};
  const auto& names = features::HandcraftedVector::names();
  header.insert(header.end(), names.begin(), names.end());
  std::string out = csv_line(header);
  for (const auto& [id, v] : rows) out += format_feature_row(id, v);
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Respiratory-sound COVID-19 screening pipeline", "respscreen"};
  app.set_config("--config", "", "TOML config file; command-line flags override it")->envname(kConfigEnv);
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t jobs = 1;
  app.add_option("--jobs,-j", jobs, "Worker threads; outputs do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SynthOptions synth_o;
  auto* synth_cmd = app.add_subcommand("synth-manifest", "Generate a synthetic cohort (manifest, WAVs, embeddings)");
  synth_cmd->add_option("--out", synth_o.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_o.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--preset", synth_o.preset, "standard or all-tasks")->capture_default_str();
  synth_cmd->add_option("--positive", synth_o.positive, "COVID-positive USERS:SESSIONS");
  synth_cmd->add_option("--healthy", synth_o.healthy, "Healthy negatives USERS:SESSIONS");
  synth_cmd->add_option("--healthy-cough", synth_o.healthy_cough, "Negatives with cough USERS:SESSIONS");
  synth_cmd->add_option("--asthma-cough", synth_o.asthma_cough, "Asthmatic negatives with cough USERS:SESSIONS");
  synth_cmd->add_option("--distractor", synth_o.distractor, "Users outside every cohort USERS:SESSIONS");
  synth_cmd->add_option("--incomplete", synth_o.incomplete, "Extra cough-only sessions from distractor users");
  synth_cmd->add_option("--duration", synth_o.duration, "Clip length in seconds");
  synth_cmd->add_option("--cough-fraction", synth_o.cough_fraction, "Share of positive sessions reporting a cough");
  synth_cmd->add_option("--positive-hz", synth_o.positive_hz, "Burst centre for positives");
  synth_cmd->add_option("--negative-hz", synth_o.negative_hz, "Burst centre for negatives");
  synth_cmd->add_option("--sample-rate", synth_o.sample_rate, "WAV sample rate");
  synth_cmd->add_flag("--scramble", synth_o.scramble, "Make spectral content independent of the label");
  synth_cmd->add_flag("--embeddings", synth_o.embeddings, "Also write embeddings.csv");

  ExtractOptions extract_o;
  auto* extract_cmd = app.add_subcommand("extract", "Extract the 477 handcrafted features of every recording");
  extract_cmd->add_option("--manifest", extract_o.manifest, "Manifest CSV")->required();
  extract_cmd->add_option("--out", extract_o.out, "Feature CSV")->required();
  extract_cmd->add_option("--skip-log", extract_o.skip_log, "Skipped-recording log (default: <out>.skipped.csv)");

  AugmentOptions augment_o;
  auto* augment_cmd = app.add_subcommand("augment", "Write six augmented copies of each recording");
  augment_cmd->add_option("--manifest", augment_o.manifest, "Manifest CSV")->required();
  augment_cmd->add_option("--out", augment_o.out, "Output directory")->required();
  augment_cmd->add_option("--seed", augment_o.seed, "Random seed")->capture_default_str();
  augment_cmd->add_option("--task", augment_o.task, "Only augment the negatives of task 2 or 3");

  RunOptions train_o;
  auto* train_cmd = app.add_subcommand("train", "Fit a deployable pipeline on a whole task cohort");
  add_run_options(train_cmd, train_o, true);
  train_cmd->add_option("--out", train_o.out, "Model JSON")->required();

  RunOptions eval_o;
  auto* eval_cmd = app.add_subcommand("evaluate", "Nested cross-validation for one configuration");
  add_run_options(eval_cmd, eval_o, true);
  eval_cmd->add_option("--out", eval_o.out, "Report JSON")->required();

  RunOptions sweep_o;
  SweepExtra sweep_x;
  auto* sweep_cmd = app.add_subcommand("sweep", "Nested CV over modalities x feature types x PCA cutoffs");
  add_run_options(sweep_cmd, sweep_o, false);
  sweep_cmd->add_option("--out", sweep_o.out, "Sweep CSV")->required();
  sweep_cmd->add_option("--modalities", sweep_x.modalities, "Subset of cough,breath,combined")->delimiter(',');
  sweep_cmd->add_option("--feature-types", sweep_x.feature_types, "Subset of the feature types")->delimiter(',');
  sweep_cmd->add_option("--cutoffs", sweep_x.cutoffs, "PCA cutoffs")->delimiter(',');

  std::vector<std::string> argv_store = {"respscreen"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth_o, out);
    if (extract_cmd->parsed()) return cmd_extract(extract_o, jobs, out, err);
    if (augment_cmd->parsed()) return cmd_augment(augment_o, jobs, out, err);
    if (train_cmd->parsed()) return cmd_train(train_o, jobs, out, err);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_o, jobs, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_o, sweep_x, jobs, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace respscreen::cli
