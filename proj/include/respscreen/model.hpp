#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace respscreen::model {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Rows are samples. Labels are 0/1.
using Labels = std::vector<int>;

/// Throws NonFiniteFeature on NaN or infinity.
void check_finite(const MatrixXd& x);

/// Throws SingleClass unless both labels occur.
void check_two_classes(const Labels& y);

struct Standardizer {
  static constexpr double kStdFloor = 1e-12;

  VectorXd mean;
  VectorXd scale;  // population std; 1 where the std is below kStdFloor

  static Standardizer fit(const MatrixXd& x);
  MatrixXd transform(const MatrixXd& x) const;
};

struct PcaModel {
  VectorXd mean;
  MatrixXd components;                // k x d, orthonormal rows
  VectorXd explained_variance_ratio;  // k entries, descending
  double cutoff = 0.0;

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  MatrixXd transform(const MatrixXd& x) const;
  MatrixXd inverse_transform(const MatrixXd& z) const;
};

/// Smallest k whose cumulative explained-variance ratio reaches `cutoff`.
/// Each component's largest-magnitude entry is positive. Throws
/// DegenerateData for fewer than two rows or zero total variance.
PcaModel fit_pca(const MatrixXd& x, double cutoff);

// Logistic regression minimizing mean log-loss + |w|^2 / (2C); the
// intercept is not penalized.
struct LrOptions {
  double gradient_tolerance = 1e-9;
  int max_iterations = 200;
};

struct LogisticModel {
  VectorXd weights;
  double intercept = 0.0;
  double c = 1.0;
  int iterations = 0;

  VectorXd margin(const MatrixXd& x) const;
  VectorXd probability(const MatrixXd& x) const;
};

double lr_objective(const MatrixXd& x, const Labels& y, double c, const VectorXd& w, double b);
/// Gradient with respect to (w, b); the last entry is the intercept.
VectorXd lr_gradient(const MatrixXd& x, const Labels& y, double c, const VectorXd& w, double b);

/// Damped Newton from zero. Throws SingleClass, NonFiniteFeature.
LogisticModel fit_lr(const MatrixXd& x, const Labels& y, double c, const LrOptions& opts = {});

enum class Kernel { kRbf, kLinear };

struct SvmOptions {
  double c = 1.0;
  double gamma = 1.0;
  Kernel kernel = Kernel::kRbf;
  double tolerance = 1e-3;
  long max_iterations = 10'000'000;
};

struct SvmModel {
  Kernel kernel = Kernel::kRbf;
  double c = 1.0;
  double gamma = 1.0;
  MatrixXd support_vectors;  // rows with alpha > 0
  VectorXd dual_coef;        // alpha_i * y_i, y in {-1, +1}
  double intercept = 0.0;
  VectorXd alpha;            // one entry per training row
  long iterations = 0;

  VectorXd decision(const MatrixXd& x) const;
};

/// Dual SMO with second-order working-set selection. Throws SingleClass,
/// NonFiniteFeature.
SvmModel fit_svm(const MatrixXd& x, const Labels& y, const SvmOptions& opts = {});

/// 1 / (d * var(x)) over all entries; 1 when the variance is zero.
double gamma_scale(const MatrixXd& x);

enum class ClassifierKind { kLogistic, kSvm };
std::string_view to_string(ClassifierKind k);
ClassifierKind parse_classifier(std::string_view s);  // throws ConfigError

/// One grid cell. An empty gamma means "scale".
struct Hyperparams {
  ClassifierKind kind = ClassifierKind::kLogistic;
  double c = 1.0;
  std::optional<double> gamma;

  std::string label() const;
};

struct GridSpec {
  ClassifierKind kind = ClassifierKind::kLogistic;
  std::vector<double> lr_c = {0.01, 0.1, 1.0, 10.0};
  std::vector<double> svm_c = {0.1, 1.0, 10.0, 100.0};
  std::vector<std::optional<double>> svm_gamma = {std::nullopt, 1e-3, 1e-2, 1e-1};
  std::size_t inner_folds = 5;
  double svm_tolerance = 1e-3;

  static GridSpec for_kind(ClassifierKind kind);
  std::vector<Hyperparams> cells() const;
};

/// Standardizer, PCA and classifier fitted together on one training set.
struct Pipeline {
  Standardizer standardizer;
  PcaModel pca;
  Hyperparams hyperparams;
  double gamma = 0.0;  // resolved value for SVMs
  LogisticModel lr;
  SvmModel svm;

  /// LR: probabilities; SVM: margins.
  VectorXd score(const MatrixXd& x) const;
  double threshold() const;

  std::string to_json() const;
  static Pipeline from_json(std::string_view text);  // throws ModelFormatError
};

Pipeline fit_pipeline(const MatrixXd& x, const Labels& y, double pca_cutoff, const Hyperparams& hp,
                      double svm_tolerance = 1e-3);

/// Called with the training row indices of every fit.
using FitHook = std::function<void(std::span<const std::size_t>)>;

struct CellScore {
  Hyperparams hyperparams;
  double gamma_order = 0.0;  // resolved gamma used for tie-breaking
  double mean_auc = 0.0;
  std::size_t folds_scored = 0;
};

struct GridResult {
  Hyperparams best;
  std::vector<CellScore> cells;
};

/// User-disjoint stratified folds: the users of each class are shuffled and
/// dealt round-robin into `n_folds` bins. Returns the fold of each row.
std::vector<std::size_t> group_folds(const Labels& y, const std::vector<std::string>& groups, std::size_t n_folds,
                                     std::uint64_t seed);

/// Inner cross-validation over user-disjoint folds. Every cell fits the full
/// pipeline on the inner training rows and is scored by ROC-AUC on the
/// held-out rows whose `validation_mask` entry is true (all when empty).
/// Best mean AUC wins; ties go to smaller C, then smaller gamma. Throws
/// TooFewUsers with fewer than two users in a class.
GridResult grid_search(const MatrixXd& x, const Labels& y, const std::vector<std::string>& groups,
                       double pca_cutoff, const GridSpec& grid, std::uint64_t seed,
                       const std::vector<bool>& validation_mask = {}, const FitHook& on_fit = {});

}  // namespace respscreen::model
