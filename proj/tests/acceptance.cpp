// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "respscreen/augment.hpp"
#include "respscreen/cli.hpp"
#include "respscreen/embeddings.hpp"
#include "respscreen/evaluate.hpp"
#include "respscreen/features.hpp"
#include "respscreen/io.hpp"
#include "respscreen/model.hpp"
#include "respscreen/rng.hpp"
#include "respscreen/synth.hpp"
#include "signals.hpp"

using namespace respscreen;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

class Criterion {
 public:
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ++failures_;
    if (failures_ <= 5) failed_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_ == 0; }

  std::string detail() const {
    std::ostringstream os;
    const auto& parts = ok() ? notes_ : failed_;
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? "; " : "") << parts[i];
    if (failures_ > failed_.size()) os << "; +" << (failures_ - failed_.size()) << " more";
    return os.str();
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> failed_, notes_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool rel_near(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Instrumentation shared by criteria 4 and 5.
class Hygiene : public evaluate::Observer {
 public:
  void on_partition(std::size_t fold, const dataset::Partition& p) override {
    std::set<std::string> train_users;
    auto& test = test_ids_[fold];
    test.clear();
    for (const auto& s : p.train) {
      train_users.insert(s.user_id);
      if (s.augmented) ++augmented_train;
      else if (!s.label) ++negative_train;
    }
    std::size_t pos = 0;
    for (const auto& s : p.test) {
      test.insert(s.sample_id);
      if (train_users.contains(s.user_id)) ++user_overlap;
      if (s.augmented) ++augmented_test;
      pos += static_cast<std::size_t>(s.label);
    }
    if (p.test.empty() || 2 * pos != p.test.size()) ++unbalanced;
    ++partitions;
  }
  void on_fit(std::size_t fold, std::string_view, const std::vector<std::string>& ids) override {
    for (const auto& id : ids) {
      const auto parent = id.substr(0, id.find('#'));
      if (test_ids_[fold].contains(parent)) ++fit_leaks;
    }
    ++fits;
  }

  std::size_t partitions = 0, fits = 0, user_overlap = 0, unbalanced = 0, augmented_test = 0, augmented_train = 0,
              negative_train = 0, fit_leaks = 0;

 private:
  std::map<std::size_t, std::set<std::string>> test_ids_;
};

void check_hygiene(Criterion& c, const Hygiene& h, const std::string& where) {
  c.expect(h.user_overlap == 0, where + ": " + std::to_string(h.user_overlap) + " train/test user overlaps");
  c.expect(h.unbalanced == 0, where + ": " + std::to_string(h.unbalanced) + " unbalanced test partitions");
  c.expect(h.augmented_test == 0, where + ": augmented rows in test");
  c.expect(h.fit_leaks == 0, where + ": test samples reached a fit");
}

// 1 -------------------------------------------------------------------------

void dimensionality(Criterion& c) {
  const auto seg = signals::chirp(150, 7000, 10.0);
  const auto t0 = Clock::now();
  const auto hand = features::extract_handcrafted(seg);
  const double elapsed = seconds_since(t0);
  const auto flat = hand.flat();
  c.expect(flat.size() == 477, "handcrafted dim " + std::to_string(flat.size()));
  c.expect(features::HandcraftedVector::names().size() == 477, "handcrafted names");
  c.expect(std::set<std::string>(features::HandcraftedVector::names().begin(), features::HandcraftedVector::names().end()).size() == 477,
           "handcrafted names not unique");
  c.expect(std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); }), "non-finite feature");
  c.expect(elapsed < 1.0, "10 s clip took " + fmt("%.3f s", elapsed));

  Rng rng(11);
  embeddings::EmbeddingFrames frames{"x", Eigen::MatrixXd(10, embeddings::kFrameDim)};
  for (Eigen::Index i = 0; i < frames.frames.size(); ++i) frames.frames.data()[i] = rng.normal();
  const auto pooled = embeddings::pool(frames);
  const std::map<embeddings::Variant, std::size_t> expected{
      {embeddings::Variant::kA, 260}, {embeddings::Variant::kB, 447}, {embeddings::Variant::kC, 733}};
  for (const auto& [variant, dim] : expected) {
    const auto v = embeddings::combine(hand, pooled, variant);
    const std::string name(embeddings::to_string(variant));
    c.expect(v.values.size() == dim && v.names.size() == dim && embeddings::combined_dim(variant) == dim,
             name + " dim " + std::to_string(v.values.size()));
  }
  c.note("477/260/447/733");
  c.note("10 s clip in " + fmt("%.3f s", elapsed));
}

// 2 -------------------------------------------------------------------------

void compare_frames(Criterion& c, const AudioSegment& seg, const std::string& name) {
  const auto fs = features::frame_features(seg);
  const auto mf = features::mfcc_features(seg);
  const double bin = 22050.0 / 2048.0;
  const std::size_t n = fs.centroid.size();
  for (std::size_t t : {std::size_t{2}, n / 2, n - 3}) {
    const auto raw = oracle::frame(seg.samples, t, 2048, 512);
    const auto mags = oracle::dft_magnitudes(oracle::hann_windowed(raw));
    const std::string at = name + " frame " + std::to_string(t);
    c.expect(rel_near(fs.centroid[t], oracle::centroid(mags, 22050, 2048), 0.02), at + " centroid");
    c.expect(std::abs(fs.rolloff[t] - oracle::rolloff(mags, 22050, 2048)) <= bin + 1e-9, at + " rolloff");
    const double zcr = oracle::sign_change_rate(raw);
    c.expect(zcr == 0.0 ? fs.zcr[t] == 0.0 : rel_near(fs.zcr[t], zcr, 0.02), at + " zcr");

    std::vector<double> log_mel(128);
    for (std::size_t m = 0; m < 128; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < mags.size(); ++k) e += oracle::mel_weight(m, static_cast<double>(k) * bin, 22050.0, 128) * mags[k] * mags[k];
      log_mel[m] = std::log(e + 1e-10);
    }
    for (std::size_t k = 0; k < 13; ++k) {
      const double ref = oracle::dct2(log_mel, k);
      const double got = mf.mfcc(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
      c.expect(std::abs(got - ref) <= 1e-6 * (1.0 + std::abs(ref)), at + " mfcc" + std::to_string(k));
    }
  }
}

void dsp_oracles(Criterion& c) {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::size_t sines = 0, chirps = 0, am = 0;
  for (int i = 0; i < 20; ++i) {
    switch (i % 3) {
      case 0: {
        const double f = rng.uniform(500, 6000);
        const auto seg = signals::sine(f, 1.0, 22050, rng.uniform(0.1, 0.9), rng.uniform(0, 6.28));
        compare_frames(c, seg, "sine " + fmt("%.0f Hz", f));
        const auto fs = features::frame_features(seg);
        c.expect(rel_near(median(fs.zcr), 2.0 * f / 22050.0, 0.02), "sine zcr vs analytic");
        c.expect(rel_near(median(fs.centroid), f, 0.02), "sine centroid vs analytic");
        ++sines;
        break;
      }
      case 1: {
        const double f0 = rng.uniform(200, 1000), f1 = rng.uniform(2000, 8000);
        compare_frames(c, signals::chirp(f0, f1, 1.5, 22050, rng.uniform(0.1, 0.9)), "chirp");
        ++chirps;
        break;
      }
      default: {
        const double mod = rng.uniform(2.5, 6.0);
        const auto seg = signals::am_noise(mod, 6.0, derive_seed(2024, "am", i));
        compare_frames(c, seg, "am noise");
        const double got = features::envelope_period(seg);
        c.expect(rel_near(got, mod, 0.10), "period " + fmt("%.3f", got) + " vs modulation " + fmt("%.3f", mod));
        const std::size_t n_frames = 1 + seg.size() / 512;
        std::vector<double> env(n_frames);
        for (std::size_t t = 0; t < n_frames; ++t) env[t] = oracle::windowed_rms(oracle::hann_windowed(oracle::frame(seg.samples, t, 2048, 512)));
        const auto mags = oracle::dft_magnitudes(env);
        const double ref = static_cast<double>(oracle::argmax(mags, 4)) * (22050.0 / 512.0) / static_cast<double>(n_frames);
        c.expect(std::abs(got - ref) <= 1e-9, "period vs envelope DFT oracle");
        ++am;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + fmt("%.1f s", elapsed));
  c.note(std::to_string(sines) + " sines, " + std::to_string(chirps) + " chirps, " + std::to_string(am) + " AM noise");
  c.note(fmt("%.1f s", elapsed));
}

// 3 -------------------------------------------------------------------------

void statistics_oracle(Criterion& c) {
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); };
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(400);
    std::vector<double> x(n);
    const double scale = std::pow(10.0, rng.uniform(-3, 3));
    for (auto& v : x) {
      switch (trial % 3) {
        case 0: v = scale * rng.normal(); break;
        case 1: v = scale * rng.uniform(); break;
        default: v = scale * std::exp(rng.normal());
      }
    }
    const auto s = features::summarize(x);
    const auto o = oracle::stats(x);
    const std::string at = "series " + std::to_string(trial);
    c.expect(near(s.mean, o.mean) && near(s.median, o.median) && near(s.rms, o.rms), at + " location");
    c.expect(near(s.max, o.max) && near(s.min, o.min) && near(s.q1, o.q1) && near(s.q3, o.q3) && near(s.iqr, o.iqr),
             at + " order statistics");
    c.expect(near(s.std, o.std) && near(s.skewness, o.skew) && near(s.kurtosis, o.kurt), at + " moments");
  }
  const auto w = features::summarize(std::vector<double>{1, 2, 3, 4});
  c.expect(w.mean == 2.5 && w.median == 2.5 && w.q1 == 1.75 && w.q3 == 3.25 && w.iqr == 1.5, "[1,2,3,4] quantiles");
  c.expect(near(w.std, std::sqrt(1.25)) && near(w.rms, std::sqrt(7.5)), "[1,2,3,4] std/rms");
  c.expect(std::abs(w.skewness) < 1e-12 && std::abs(w.kurtosis + 1.36) < 1e-12, "[1,2,3,4] skew/kurtosis");
  c.note("1000 series + [1,2,3,4]");
}

// 4 -------------------------------------------------------------------------

synth::SynthConfig augment_cohort(std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.seed = seed;
  cfg.positive = {24, 30};
  cfg.positive_cough_fraction = 1.0;
  cfg.healthy = {0, 0};
  cfg.healthy_cough = {14, 16};
  cfg.duration_s = 0.8;
  return cfg;
}

void augmentation(Criterion& c) {
  Rng rng(5);
  augment::AugmentConfig acfg;
  for (int i = 0; i < 20; ++i) {
    acfg.rng_seed = derive_seed(5, "clip", i);
    const auto seg = signals::chirp(rng.uniform(200, 800), rng.uniform(1000, 4000), 1.0, 22050, 0.3);
    const auto copies = augment::augment_six(seg, "s" + std::to_string(i), acfg);
    c.expect(copies.size() == 6, "copies " + std::to_string(copies.size()));
    std::map<augment::Method, int> per_method;
    for (const auto& copy : copies) {
      const auto& p = copy.provenance;
      ++per_method[p.method];
      switch (p.method) {
        case augment::Method::kAmplify:
          c.expect(p.parameter >= 1.15 && p.parameter <= 2.0, "amplification factor " + fmt("%.4f", p.parameter));
          break;
        case augment::Method::kPitchSpeed:
          c.expect(p.parameter >= 0.8 && p.parameter <= 0.99, "rate factor " + fmt("%.4f", p.parameter));
          break;
        case augment::Method::kWhiteNoise:
          c.expect(p.parameter >= 20.0 && p.parameter <= 40.0, "SNR " + fmt("%.2f", p.parameter));
      }
      c.expect(std::all_of(copy.audio.samples.begin(), copy.audio.samples.end(), [](double v) { return std::abs(v) <= 1.0; }),
               "augmented sample out of [-1, 1]");
    }
    for (auto m : {augment::Method::kAmplify, augment::Method::kWhiteNoise, augment::Method::kPitchSpeed}) {
      c.expect(per_method[m] == 2, "two copies per method");
    }
  }

  const auto cohort = synth::generate(augment_cohort(3));
  evaluate::FeatureStore store(cohort.records, evaluate::memory_loader(cohort.audio), cohort.embeddings);
  evaluate::RunConfig cfg;
  cfg.task_id = 2;
  cfg.modality = evaluate::ModalityChoice::kCough;
  cfg.augment = true;
  cfg.seed = 9;
  Hygiene h;
  const auto report = evaluate::run_nested_cv(cohort.records, store, cfg, &h);
  c.expect(h.partitions == 10, "partitions " + std::to_string(h.partitions));
  c.expect(h.augmented_test == 0, std::to_string(h.augmented_test) + " augmented rows in test");
  c.expect(h.augmented_train == 6 * h.negative_train,
           "augmented train rows " + std::to_string(h.augmented_train) + " vs 6 x " + std::to_string(h.negative_train));
  check_hygiene(c, h, "task 2 augmented");
  c.note("20 clips x 6 variants");
  c.note("10 folds, " + std::to_string(h.augmented_train) + " augmented train rows, 0 in test");
  c.note("AUC " + fmt("%.2f", report.auc.mean));
}

// 5 -------------------------------------------------------------------------

void cv_hygiene(Criterion& c) {
  auto scfg = synth::all_tasks_config(21);
  scfg.embeddings = true;
  const auto cohort = synth::generate(scfg);
  std::set<std::string> users;
  for (const auto& r : cohort.records) users.insert(r.user_id);
  c.expect(users.size() == 200, "manifest users " + std::to_string(users.size()));
  evaluate::FeatureStore store(cohort.records, evaluate::memory_loader(cohort.audio), cohort.embeddings);

  std::size_t runs = 0, partitions = 0, cells = 0;
  for (int task : {1, 2, 3}) {
    evaluate::RunConfig cfg;
    cfg.task_id = task;
    cfg.seed = 100 + static_cast<std::uint64_t>(task);
    {
      Hygiene h;
      evaluate::run_nested_cv(cohort.records, store, cfg, &h);
      check_hygiene(c, h, "task " + std::to_string(task));
      c.expect(h.partitions == 10, "task " + std::to_string(task) + " partitions");
      partitions += h.partitions;
      ++runs;
    }
    if (task > 1) {
      cfg.augment = true;
      Hygiene h;
      evaluate::run_nested_cv(cohort.records, store, cfg, &h);
      check_hygiene(c, h, "task " + std::to_string(task) + " augmented");
      c.expect(h.augmented_train > 0, "task " + std::to_string(task) + " augmentation inactive");
      partitions += h.partitions;
      ++runs;
      cfg.augment = false;
    }
    Hygiene hs;
    const auto rows = evaluate::sweep(cohort.records, store, cfg, {}, &hs);
    for (const auto& row : rows) {
      c.expect(row.status == "ok", "task " + std::to_string(task) + " sweep cell status " + row.status);
    }
    check_hygiene(c, hs, "task " + std::to_string(task) + " sweep");
    c.expect(hs.partitions == 10 * rows.size(), "task " + std::to_string(task) + " sweep partitions");
    partitions += hs.partitions;
    cells += rows.size();
  }
  c.note("200 users");
  c.note(std::to_string(runs) + " runs + " + std::to_string(cells) + " sweep cells");
  c.note(std::to_string(partitions) + " partitions, 0 overlaps, all balanced");
}

// 6 -------------------------------------------------------------------------

void pca_contract(Criterion& c) {
  Rng rng(8);
  std::size_t fits = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 40 + static_cast<Eigen::Index>(rng.index(80)), d = 5 + static_cast<Eigen::Index>(rng.index(20));
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index j = 0; j < d; ++j) x.col(j) *= std::pow(2.0, rng.uniform(-2, 2));
    x.col(1) += 2.0 * x.col(0);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
    const auto ev = oracle::symmetric_eigenvalues(oracle::covariance(rows));
    const double total = std::accumulate(ev.begin(), ev.end(), 0.0);
    for (double cutoff : evaluate::all_pca_cutoffs()) {
      const auto p = model::fit_pca(x, cutoff);
      const std::string at = "trial " + std::to_string(trial) + " cutoff " + fmt("%.2f", cutoff);
      const Eigen::MatrixXd gram = p.components * p.components.transpose();
      c.expect((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-8, at + " orthonormality");
      const double retained = std::accumulate(p.explained_variance_ratio.begin(), p.explained_variance_ratio.end(), 0.0);
      c.expect(retained >= cutoff, at + " retained " + fmt("%.6f", retained));
      double before_last = 0.0;
      for (std::size_t i = 0; i + 1 < p.k(); ++i) before_last += ev[i] / total;
      c.expect(before_last < cutoff, at + " k not minimal");
      c.expect(before_last + ev[p.k() - 1] / total >= cutoff - 1e-12, at + " oracle cumulative ratio below cutoff");
      ++fits;
    }
  }
  c.note(std::to_string(fits) + " fits over cutoffs 0.7/0.8/0.9/0.95");
}

// 7 -------------------------------------------------------------------------

void classifiers(Criterion& c) {
  Rng rng(8);
  Eigen::MatrixXd x(40, 2);
  model::Labels y;
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double sx = (i % 2) ? 1.0 : -1.0, sy = ((i / 2) % 2) ? 1.0 : -1.0;
    x(i, 0) = sx + 0.15 * rng.normal();
    x(i, 1) = sy + 0.15 * rng.normal();
    y.push_back(sx * sy > 0 ? 1 : 0);
  }
  model::SvmOptions opts;
  opts.c = 10.0;
  opts.gamma = 1.0;
  const auto m = model::fit_svm(x, y, opts);
  const Eigen::VectorXd f = m.decision(x);
  std::vector<std::vector<double>> k(40, std::vector<double>(40));
  std::vector<double> ys(40);
  for (std::size_t i = 0; i < 40; ++i) {
    ys[i] = y[i] ? 1.0 : -1.0;
    for (std::size_t j = 0; j < 40; ++j) {
      k[i][j] = std::exp(-(x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm());
    }
  }
  const auto a_oracle = oracle::svm_dual_qp(k, ys, 10.0);
  std::size_t correct = 0, oracle_correct = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    correct += (f(static_cast<Eigen::Index>(i)) > 0) == (y[i] == 1);
    double s = 0.0;
    for (std::size_t j = 0; j < 40; ++j) s += a_oracle[j] * ys[j] * k[i][j];
    // The oracle has no bias; sign agreement with the SMO decision before its intercept.
    oracle_correct += (s > 0) == (f(static_cast<Eigen::Index>(i)) + m.intercept > 0);
  }
  const double obj_oracle = oracle::svm_dual_objective(k, ys, a_oracle);
  const double obj_smo = oracle::svm_dual_objective(k, ys, std::vector<double>(m.alpha.data(), m.alpha.data() + m.alpha.size()));
  c.expect(correct >= 38, "XOR training accuracy " + std::to_string(correct) + "/40");
  c.expect(std::abs(obj_smo - obj_oracle) <= 1e-3 * std::abs(obj_oracle),
           "dual objective " + fmt("%.6f", obj_smo) + " vs QP oracle " + fmt("%.6f", obj_oracle));
  c.expect(oracle_correct == 40, "QP oracle disagrees on " + std::to_string(40 - oracle_correct) + " points");

  double worst_grad = 0.0, worst_fd = 0.0;
  for (double cval : {0.01, 0.1, 1.0, 10.0}) {
    Eigen::MatrixXd xb(120, 5);
    model::Labels yb;
    for (Eigen::Index i = 0; i < 120; ++i) {
      const int label = i < 60 ? 1 : 0;
      yb.push_back(label);
      for (Eigen::Index j = 0; j < 5; ++j) xb(i, j) = (label ? 0.6 : -0.6) + rng.normal();
    }
    const auto lr = model::fit_lr(xb, yb, cval);
    const double g = model::lr_gradient(xb, yb, cval, lr.weights, lr.intercept).norm();
    worst_grad = std::max(worst_grad, g);
    c.expect(g < 1e-6, "LR gradient norm " + fmt("%.3g", g) + " at C=" + fmt("%g", cval));
    const Eigen::VectorXd w = lr.weights.array() + 0.3;
    const double b = lr.intercept - 0.2;
    const Eigen::VectorXd ga = model::lr_gradient(xb, yb, cval, w, b);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j <= w.size(); ++j) {
      Eigen::VectorXd wp = w, wm = w;
      double bp = b, bm = b;
      if (j < w.size()) {
        wp(j) += h;
        wm(j) -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (model::lr_objective(xb, yb, cval, wp, bp) - model::lr_objective(xb, yb, cval, wm, bm)) / (2 * h);
      const double rel = std::abs(fd - ga(j)) / std::max(std::abs(ga(j)), 1e-12);
      worst_fd = std::max(worst_fd, rel);
      c.expect(rel <= 1e-4, "finite difference mismatch " + fmt("%.3g", rel));
    }
  }
  c.note("XOR " + std::to_string(correct) + "/40");
  c.note("LR |grad| <= " + fmt("%.1e", worst_grad));
  c.note("finite differences rel <= " + fmt("%.1e", worst_fd));
}

// 8 -------------------------------------------------------------------------

void discrimination(Criterion& c) {
  const auto t0 = Clock::now();
  double aucs[2] = {0, 0};
  for (bool scramble : {false, true}) {
    synth::SynthConfig scfg;
    scfg.seed = 31;
    scfg.scramble = scramble;
    const auto cohort = synth::generate(scfg);
    evaluate::FeatureStore store(cohort.records, evaluate::memory_loader(cohort.audio), cohort.embeddings);
    evaluate::RunConfig cfg;
    cfg.task_id = 1;
    cfg.seed = 32;
    const auto report = evaluate::run_nested_cv(cohort.records, store, cfg);
    aucs[scramble] = report.auc.mean;
  }
  const double elapsed = seconds_since(t0);
  c.expect(aucs[0] >= 0.95, "separable AUC " + fmt("%.3f", aucs[0]));
  c.expect(aucs[1] >= 0.35 && aucs[1] <= 0.65, "scrambled AUC " + fmt("%.3f", aucs[1]));
  c.expect(elapsed < 300.0, "runtime " + fmt("%.0f s", elapsed));
  c.note("separable AUC " + fmt("%.3f", aucs[0]));
  c.note("scrambled AUC " + fmt("%.3f", aucs[1]));
  c.note(fmt("%.0f s", elapsed));
}

// 9 -------------------------------------------------------------------------

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

void determinism(Criterion& c) {
  const fs::path root = fs::temp_directory_path() / "respscreen_acceptance_determinism";
  fs::remove_all(root);
  const auto p = [&](const std::string& s) { return (root / s).string(); };
  std::vector<std::string> artifacts;
  for (const std::string run : {"a", "b"}) {
    const std::string jobs = run == "a" ? "1" : "3";
    const auto d = [&](const std::string& s) { return p(run + "/" + s); };
    c.expect(cli({"synth-manifest", "--out", d("c"), "--seed", "12", "--positive", "12:15", "--healthy", "10:14",
                  "--healthy-cough", "8:9", "--duration", "0.8", "--embeddings"}) == 0,
             "synth-manifest failed");
    c.expect(cli({"extract", "-j", jobs, "--manifest", d("c/manifest.csv"), "--out", d("features.csv")}) == 0,
             "extract failed");
    c.expect(cli({"evaluate", "-j", jobs, "--manifest", d("c/manifest.csv"), "--features", d("features.csv"),
                  "--seed", "5", "--out", d("report.json")}) == 0,
             "evaluate failed");
    c.expect(cli({"evaluate", "-j", jobs, "--manifest", d("c/manifest.csv"), "--task", "2", "--modality", "cough",
                  "--augment", "--seed", "5", "--out", d("report_aug.json")}) == 0,
             "augmented evaluate failed");
    c.expect(cli({"train", "-j", jobs, "--manifest", d("c/manifest.csv"), "--seed", "5", "--out", d("model.json")}) == 0,
             "train failed");
    c.expect(cli({"augment", "-j", jobs, "--manifest", d("c/manifest.csv"), "--seed", "5", "--task", "2", "--out",
                  d("aug")}) == 0,
             "augment failed");
    c.expect(cli({"sweep", "-j", jobs, "--manifest", d("c/manifest.csv"), "--embeddings", d("c/embeddings.csv"),
                  "--task", "2", "--cutoffs", "0.7,0.95", "--seed", "5", "--out", d("sweep.csv")}) == 0,
             "sweep failed");
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    const auto other = root / "b" / rel;
    c.expect(fs::exists(other) && read_file_text(entry.path()) == read_file_text(other), "differs: " + rel.string());
    c.expect(entry.path().extension() != ".tmp", "temporary file left: " + rel.string());
    ++compared;
  }
  c.expect(compared > 0, "no artifacts");
  fs::remove_all(root);
  c.note(std::to_string(compared) + " artifacts byte-identical across runs with -j 1 and -j 3");
}

// 10 ------------------------------------------------------------------------

void sweep_completeness(Criterion& c) {
  auto scfg = augment_cohort(44);
  scfg.embeddings = true;
  const auto cohort = synth::generate(scfg);
  const auto count_ok = [](const std::vector<evaluate::SweepRow>& rows) {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.status == "ok"; }));
  };
  const auto cells = [](const std::vector<evaluate::SweepRow>& rows) {
    std::set<std::tuple<evaluate::ModalityChoice, evaluate::FeatureType, double>> s;
    for (const auto& r : rows) s.emplace(r.modality, r.feature_type, r.pca_cutoff);
    return s.size();
  };

  evaluate::RunConfig cfg;
  cfg.task_id = 2;
  cfg.seed = 3;
  cfg.outer_folds = 3;

  evaluate::FeatureStore with(cohort.records, evaluate::memory_loader(cohort.audio), cohort.embeddings);
  const auto full = evaluate::sweep(cohort.records, with, cfg);
  c.expect(full.size() == 60 && cells(full) == 60, "full sweep rows " + std::to_string(full.size()));
  c.expect(count_ok(full) == 60, "full sweep ok rows " + std::to_string(count_ok(full)));
  const auto csv = evaluate::parse_sweep_csv(evaluate::format_sweep_csv(full));
  c.expect(csv.size() == full.size(), "CSV round trip rows");

  evaluate::FeatureStore without(cohort.records, evaluate::memory_loader(cohort.audio), {});
  const auto plain = evaluate::sweep(cohort.records, without, cfg);
  c.expect(plain.size() == 60 && cells(plain) == 60, "no-embedding sweep rows " + std::to_string(plain.size()));
  c.expect(count_ok(plain) == 3 * 4 * 1, "no-embedding ok rows " + std::to_string(count_ok(plain)));

  evaluate::SweepOptions opts;
  opts.modalities = {evaluate::ModalityChoice::kCough, evaluate::ModalityChoice::kCombined};
  opts.cutoffs = {0.8, 0.95};
  opts.feature_types = {evaluate::FeatureType::kHandcrafted, evaluate::FeatureType::kCombinedA};
  cfg.augment = true;
  const auto aug = evaluate::sweep(cohort.records, with, cfg, opts);
  c.expect(aug.size() == 8 && cells(aug) == 8, "augmented sweep rows " + std::to_string(aug.size()));
  c.expect(count_ok(aug) == 4, "augmented sweep ok rows " + std::to_string(count_ok(aug)));
  for (const auto* rows : {&full, &plain, &aug}) {
    for (const auto& r : *rows) {
      c.expect(r.status == "ok" ? std::isfinite(r.auc.mean) : std::isnan(r.auc.mean), "metric/status mismatch");
      c.expect(!r.status.empty(), "empty status");
    }
  }
  c.note("3x4x5 = 60 rows with embeddings (60 ok)");
  c.note("60 rows without (12 ok, 48 skipped)");
  c.note("2x2x2 augmented = 8 rows (4 ok)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"feature-vector dimensionality", dimensionality},
      {"DSP oracle suite", dsp_oracles},
      {"statistics oracle", statistics_oracle},
      {"augmentation protocol", augmentation},
      {"CV hygiene", cv_hygiene},
      {"PCA contract", pca_contract},
      {"classifier sanity", classifiers},
      {"end-to-end discrimination", discrimination},
      {"determinism", determinism},
      {"sweep completeness", sweep_completeness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok();
    std::cout << (c.ok() ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << " ("
              << c.detail() << ") [" << fmt("%.1f s", seconds_since(t0)) << "]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
