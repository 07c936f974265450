#include "respscreen/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "json.hpp"
#include "respscreen/errors.hpp"
#include "respscreen/io.hpp"
#include "respscreen/metrics.hpp"
#include "respscreen/rng.hpp"

namespace respscreen::model {

namespace {

double softplus(double f) { return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

double sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

MatrixXd kernel_matrix(const MatrixXd& a, const MatrixXd& b, Kernel kernel, double gamma) {
  MatrixXd k = a * b.transpose();
  if (kernel == Kernel::kLinear) return k;
  const VectorXd na = a.rowwise().squaredNorm();
  const VectorXd nb = b.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      k(i, j) = std::exp(-gamma * std::max(0.0, na(i) + nb(j) - 2.0 * k(i, j)));
    }
  }
  return k;
}

MatrixXd select_rows(const MatrixXd& x, const std::vector<std::size_t>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Labels select(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

void check_finite(const MatrixXd& x) {
  if (!x.allFinite()) throw NonFiniteFeature("feature matrix contains NaN or infinite values");
}

void check_two_classes(const Labels& y) {
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == 0) neg = true;
    else throw std::invalid_argument("labels must be 0 or 1");
  }
  if (!pos || !neg) throw SingleClass("training data needs both classes");
}

Standardizer Standardizer::fit(const MatrixXd& x) {
  if (x.rows() == 0) throw DegenerateData("cannot standardize an empty matrix");
  check_finite(x);
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale(j) = sd < kStdFloor ? 1.0 : sd;
  }
  return s;
}

MatrixXd Standardizer::transform(const MatrixXd& x) const {
  if (x.cols() != mean.size()) throw DimensionMismatch("standardizer expects " + std::to_string(mean.size()) + " columns");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

MatrixXd PcaModel::transform(const MatrixXd& x) const {
  if (x.cols() != mean.size()) throw DimensionMismatch("PCA expects " + std::to_string(mean.size()) + " columns");
  return (x.rowwise() - mean.transpose()) * components.transpose();
}

MatrixXd PcaModel::inverse_transform(const MatrixXd& z) const {
  return (z * components).rowwise() + mean.transpose();
}

PcaModel fit_pca(const MatrixXd& x, double cutoff) {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) throw ConfigError("PCA cutoff must lie in (0, 1]");
  if (x.rows() < 2) throw DegenerateData("PCA needs at least two rows");
  check_finite(x);
  PcaModel p;
  p.cutoff = cutoff;
  p.mean = x.colwise().mean().transpose();
  const MatrixXd centered = x.rowwise() - p.mean.transpose();
  const double scale = x.cwiseAbs().maxCoeff();
  const double total = centered.squaredNorm();
  if (!(total > std::pow(1e-12 * scale, 2) * static_cast<double>(x.size())) || total == 0.0) {
    throw DegenerateData("PCA input has zero total variance");
  }
  Eigen::BDCSVD<MatrixXd> svd(centered, Eigen::ComputeThinV);
  const VectorXd s2 = svd.singularValues().array().square();
  const double s2_total = s2.sum();
  Eigen::Index k = 0;
  double cumulative = 0.0;
  while (k < s2.size()) {
    cumulative += s2(k) / s2_total;
    ++k;
    if (cumulative >= cutoff) break;
  }
  p.components = svd.matrixV().leftCols(k).transpose();
  p.explained_variance_ratio = s2.head(k) / s2_total;
  for (Eigen::Index r = 0; r < k; ++r) {
    Eigen::Index arg = 0;
    p.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (p.components(r, arg) < 0.0) p.components.row(r) *= -1.0;
  }
  return p;
}

VectorXd LogisticModel::margin(const MatrixXd& x) const {
  return (x * weights).array() + intercept;
}

VectorXd LogisticModel::probability(const MatrixXd& x) const { return margin(x).unaryExpr(&sigmoid); }

double lr_objective(const MatrixXd& x, const Labels& y, double c, const VectorXd& w, double b) {
  const VectorXd f = (x * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) loss += softplus(f(i)) - y[static_cast<std::size_t>(i)] * f(i);
  return loss / static_cast<double>(x.rows()) + w.squaredNorm() / (2.0 * c);
}

VectorXd lr_gradient(const MatrixXd& x, const Labels& y, double c, const VectorXd& w, double b) {
  const VectorXd f = (x * w).array() + b;
  VectorXd r(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) r(i) = sigmoid(f(i)) - y[static_cast<std::size_t>(i)];
  const double n = static_cast<double>(x.rows());
  VectorXd g(w.size() + 1);
  g.head(w.size()) = x.transpose() * r / n + w / c;
  g(w.size()) = r.sum() / n;
  return g;
}

LogisticModel fit_lr(const MatrixXd& x, const Labels& y, double c, const LrOptions& opts) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("row and label counts differ");
  if (!(c > 0.0)) throw ConfigError("C must be positive");
  check_finite(x);
  check_two_classes(y);
  const Eigen::Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  LogisticModel m;
  m.c = c;
  m.weights = VectorXd::Zero(d);
  double obj = lr_objective(x, y, c, m.weights, m.intercept);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const VectorXd g = lr_gradient(x, y, c, m.weights, m.intercept);
    if (g.norm() < opts.gradient_tolerance) break;
    m.iterations = it + 1;

    const VectorXd f = m.margin(x);
    VectorXd s(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double p = sigmoid(f(i));
      s(i) = p * (1.0 - p);
    }
    MatrixXd h(d + 1, d + 1);
    const MatrixXd xs = x.array().colwise() * s.array();
    h.topLeftCorner(d, d) = x.transpose() * xs / n;
    h.topLeftCorner(d, d).diagonal().array() += 1.0 / c;
    h.topRightCorner(d, 1) = xs.colwise().sum().transpose() / n;
    h.bottomLeftCorner(1, d) = h.topRightCorner(d, 1).transpose();
    h(d, d) = s.sum() / n + 1e-12;
    const VectorXd step = -h.ldlt().solve(g);

    double t = 1.0;
    const double slope = g.dot(step);
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd w = m.weights + t * step.head(d);
      const double b = m.intercept + t * step(d);
      const double cand = lr_objective(x, y, c, w, b);
      if (cand <= obj + 1e-4 * t * slope) {
        m.weights = w;
        m.intercept = b;
        improved = cand < obj || t == 1.0;
        obj = cand;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }
  return m;
}

VectorXd SvmModel::decision(const MatrixXd& x) const {
  if (support_vectors.rows() == 0) return VectorXd::Constant(x.rows(), -intercept);
  if (x.cols() != support_vectors.cols()) throw DimensionMismatch("SVM expects " + std::to_string(support_vectors.cols()) + " columns");
  return (kernel_matrix(x, support_vectors, kernel, gamma) * dual_coef).array() - intercept;
}

SvmModel fit_svm(const MatrixXd& x, const Labels& y01, const SvmOptions& opts) {
  if (static_cast<std::size_t>(x.rows()) != y01.size()) throw std::invalid_argument("row and label counts differ");
  if (!(opts.c > 0.0)) throw ConfigError("C must be positive");
  if (opts.kernel == Kernel::kRbf && !(opts.gamma > 0.0)) throw ConfigError("gamma must be positive");
  check_finite(x);
  check_two_classes(y01);

  constexpr double kTau = 1e-12;
  const auto n = static_cast<std::size_t>(x.rows());
  const double c = opts.c;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = y01[i] == 1 ? 1.0 : -1.0;
  const MatrixXd k = kernel_matrix(x, x, opts.kernel, opts.gamma);
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };

  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto at_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  SvmModel m;
  m.kernel = opts.kernel;
  m.c = c;
  m.gamma = opts.gamma;
  const long max_iter = std::max<long>(opts.max_iterations, 100L * static_cast<long>(n));
  for (; m.iterations < max_iter; ++m.iterations) {
    // Working set: maximal violating i, then j with the largest second-order decrease.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t gi = -1, gj = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !at_upper(t) : !at_lower(t)) {
        const double v = -y[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          gi = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    if (gi < 0) break;
    const auto i = static_cast<std::size_t>(gi);
    double obj_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !at_lower(t) : !at_upper(t)) {
        const double v = y[t] * grad[t];
        const double grad_diff = gmax + v;
        gmax2 = std::max(gmax2, v);
        if (grad_diff > 0.0) {
          const auto ei = static_cast<Eigen::Index>(i), et = static_cast<Eigen::Index>(t);
          double quad = k(ei, ei) + k(et, et) - 2.0 * k(ei, et);
          if (quad <= 0.0) quad = kTau;
          const double obj = -(grad_diff * grad_diff) / quad;
          if (obj <= obj_min) {
            obj_min = obj;
            gj = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (gmax + gmax2 < opts.tolerance || gj < 0) break;
    const auto j = static_cast<std::size_t>(gj);

    const double old_ai = alpha[i], old_aj = alpha[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * dai + q(j, t) * daj;
  }

  // Intercept: mean over free vectors, else the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  m.intercept = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  m.alpha = Eigen::Map<const VectorXd>(alpha.data(), static_cast<Eigen::Index>(n));
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) sv.push_back(t);
  }
  m.support_vectors = select_rows(x, sv);
  m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) m.dual_coef(static_cast<Eigen::Index>(s)) = alpha[sv[s]] * y[sv[s]];
  return m;
}

double gamma_scale(const MatrixXd& x) {
  if (x.size() == 0) return 1.0;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

std::string_view to_string(ClassifierKind k) { return k == ClassifierKind::kLogistic ? "lr" : "svm"; }

ClassifierKind parse_classifier(std::string_view s) {
  if (s == "lr") return ClassifierKind::kLogistic;
  if (s == "svm") return ClassifierKind::kSvm;
  throw ConfigError("classifier must be 'lr' or 'svm', got '" + std::string(s) + "'");
}

std::string Hyperparams::label() const {
  std::string out = std::string(to_string(kind)) + " C=" + format_double(c, 6);
  if (kind == ClassifierKind::kSvm) out += " gamma=" + (gamma ? format_double(*gamma, 6) : std::string("scale"));
  return out;
}

GridSpec GridSpec::for_kind(ClassifierKind kind) {
  GridSpec g;
  g.kind = kind;
  return g;
}

std::vector<Hyperparams> GridSpec::cells() const {
  std::vector<Hyperparams> out;
  if (kind == ClassifierKind::kLogistic) {
    for (double c : lr_c) out.push_back({kind, c, std::nullopt});
  } else {
    for (double c : svm_c) {
      for (const auto& g : svm_gamma) out.push_back({kind, c, g});
    }
  }
  if (out.empty()) throw ConfigError("hyperparameter grid is empty");
  return out;
}

VectorXd Pipeline::score(const MatrixXd& x) const {
  const MatrixXd z = pca.transform(standardizer.transform(x));
  return hyperparams.kind == ClassifierKind::kLogistic ? lr.probability(z) : svm.decision(z);
}

double Pipeline::threshold() const { return hyperparams.kind == ClassifierKind::kLogistic ? 0.5 : 0.0; }

Pipeline fit_pipeline(const MatrixXd& x, const Labels& y, double pca_cutoff, const Hyperparams& hp,
                      double svm_tolerance) {
  check_two_classes(y);
  Pipeline p;
  p.hyperparams = hp;
  p.standardizer = Standardizer::fit(x);
  p.pca = fit_pca(p.standardizer.transform(x), pca_cutoff);
  const MatrixXd z = p.pca.transform(p.standardizer.transform(x));
  if (hp.kind == ClassifierKind::kLogistic) {
    p.lr = fit_lr(z, y, hp.c);
  } else {
    p.gamma = hp.gamma ? *hp.gamma : gamma_scale(z);
    p.svm = fit_svm(z, y, {hp.c, p.gamma, Kernel::kRbf, svm_tolerance});
  }
  return p;
}

namespace {

using nlohmann::json;

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MatrixXd json_mat(const json& j, Eigen::Index cols) {
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = json_vec(j[r]);
    if (row.size() != cols) throw ModelFormatError("ragged matrix in model file");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

constexpr int kFormatVersion = 1;

}  // namespace

std::string Pipeline::to_json() const {
  json j;
  j["format"] = "respscreen-pipeline";
  j["version"] = kFormatVersion;
  j["standardizer"] = {{"mean", vec_json(standardizer.mean)}, {"scale", vec_json(standardizer.scale)}};
  j["pca"] = {{"cutoff", pca.cutoff},
              {"mean", vec_json(pca.mean)},
              {"components", mat_json(pca.components)},
              {"explained_variance_ratio", vec_json(pca.explained_variance_ratio)}};
  json clf = {{"kind", std::string(to_string(hyperparams.kind))}, {"c", hyperparams.c}};
  clf["gamma"] = hyperparams.gamma ? json(*hyperparams.gamma) : json("scale");
  if (hyperparams.kind == ClassifierKind::kLogistic) {
    clf["weights"] = vec_json(lr.weights);
    clf["intercept"] = lr.intercept;
  } else {
    clf["gamma_value"] = gamma;
    clf["kernel"] = svm.kernel == Kernel::kRbf ? "rbf" : "linear";
    clf["support_vectors"] = mat_json(svm.support_vectors);
    clf["dual_coef"] = vec_json(svm.dual_coef);
    clf["intercept"] = svm.intercept;
  }
  j["classifier"] = clf;
  return j.dump(1) + "\n";
}

Pipeline Pipeline::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "respscreen-pipeline") throw ModelFormatError("not a pipeline file");
    if (j.at("version") != kFormatVersion) {
      throw ModelFormatError("unsupported pipeline version " + j.at("version").dump());
    }
    Pipeline p;
    p.standardizer.mean = json_vec(j.at("standardizer").at("mean"));
    p.standardizer.scale = json_vec(j.at("standardizer").at("scale"));
    const auto d = p.standardizer.mean.size();
    if (p.standardizer.scale.size() != d) throw ModelFormatError("standardizer size mismatch");
    const json& pca = j.at("pca");
    p.pca.cutoff = pca.at("cutoff").get<double>();
    p.pca.mean = json_vec(pca.at("mean"));
    p.pca.components = json_mat(pca.at("components"), d);
    p.pca.explained_variance_ratio = json_vec(pca.at("explained_variance_ratio"));
    if (p.pca.mean.size() != d || p.pca.explained_variance_ratio.size() != p.pca.components.rows()) {
      throw ModelFormatError("PCA size mismatch");
    }
    const json& clf = j.at("classifier");
    p.hyperparams.kind = parse_classifier(clf.at("kind").get<std::string>());
    p.hyperparams.c = clf.at("c").get<double>();
    if (!clf.at("gamma").is_string()) p.hyperparams.gamma = clf.at("gamma").get<double>();
    const auto k = p.pca.components.rows();
    if (p.hyperparams.kind == ClassifierKind::kLogistic) {
      p.lr.c = p.hyperparams.c;
      p.lr.weights = json_vec(clf.at("weights"));
      p.lr.intercept = clf.at("intercept").get<double>();
      if (p.lr.weights.size() != k) throw ModelFormatError("weight count mismatch");
    } else {
      p.gamma = clf.at("gamma_value").get<double>();
      p.svm.kernel = clf.at("kernel") == "linear" ? Kernel::kLinear : Kernel::kRbf;
      p.svm.c = p.hyperparams.c;
      p.svm.gamma = p.gamma;
      p.svm.support_vectors = json_mat(clf.at("support_vectors"), k);
      p.svm.dual_coef = json_vec(clf.at("dual_coef"));
      p.svm.intercept = clf.at("intercept").get<double>();
      if (p.svm.dual_coef.size() != p.svm.support_vectors.rows()) throw ModelFormatError("support vector mismatch");
    }
    return p;
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed pipeline file: ") + e.what());
  } catch (const ConfigError& e) {
    throw ModelFormatError(e.what());
  }
}

std::vector<std::size_t> group_folds(const Labels& y, const std::vector<std::string>& groups, std::size_t n_folds,
                                     std::uint64_t seed) {
  if (groups.size() != y.size()) throw std::invalid_argument("group and label counts differ");
  std::set<std::string> positive;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) positive.insert(groups[i]);
  }
  std::set<std::string> negative;
  for (const auto& g : groups) {
    if (!positive.contains(g)) negative.insert(g);
  }
  Rng rng(derive_seed(seed, "inner-folds"));
  std::map<std::string, std::size_t> fold_of;
  for (const auto* set : {&positive, &negative}) {
    std::vector<std::string> users(set->begin(), set->end());
    rng.shuffle(users);
    for (std::size_t u = 0; u < users.size(); ++u) fold_of[users[u]] = u % n_folds;
  }
  std::vector<std::size_t> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = fold_of.at(groups[i]);
  return out;
}

GridResult grid_search(const MatrixXd& x, const Labels& y, const std::vector<std::string>& groups,
                       double pca_cutoff, const GridSpec& grid, std::uint64_t seed,
                       const std::vector<bool>& validation_mask, const FitHook& on_fit) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("row and label counts differ");
  if (!validation_mask.empty() && validation_mask.size() != y.size()) {
    throw std::invalid_argument("validation mask length differs from label count");
  }
  check_two_classes(y);
  std::set<std::string> pos_users, all_users(groups.begin(), groups.end());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) pos_users.insert(groups[i]);
  }
  const std::size_t min_users = std::min(pos_users.size(), all_users.size() - pos_users.size());
  if (min_users < 2) throw TooFewUsers("inner cross-validation needs at least 2 users per class");
  const std::size_t n_folds = std::min(grid.inner_folds, min_users);
  const auto cells = grid.cells();
  const auto fold_of = group_folds(y, groups, n_folds, seed);

  GridResult result;
  result.cells.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) result.cells[c].hyperparams = cells[c];

  for (std::size_t f = 0; f < n_folds; ++f) {
    std::vector<std::size_t> train, val;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (fold_of[i] != f) train.push_back(i);
      else if (validation_mask.empty() || validation_mask[i]) val.push_back(i);
    }
    const Labels y_train = select(y, train), y_val = select(y, val);
    const bool scorable = std::count(y_val.begin(), y_val.end(), 1) > 0 && std::count(y_val.begin(), y_val.end(), 0) > 0;
    if (!scorable) continue;
    if (on_fit) on_fit(train);
    const MatrixXd x_train = select_rows(x, train);
    const auto standardizer = Standardizer::fit(x_train);
    const auto pca = fit_pca(standardizer.transform(x_train), pca_cutoff);
    const MatrixXd z_train = pca.transform(standardizer.transform(x_train));
    const MatrixXd z_val = pca.transform(standardizer.transform(select_rows(x, val)));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Hyperparams& hp = cells[c];
      VectorXd scores;
      if (hp.kind == ClassifierKind::kLogistic) {
        scores = fit_lr(z_train, y_train, hp.c).probability(z_val);
      } else {
        const double gamma = hp.gamma ? *hp.gamma : gamma_scale(z_train);
        scores = fit_svm(z_train, y_train, {hp.c, gamma, Kernel::kRbf, grid.svm_tolerance}).decision(z_val);
      }
      const double auc = evaluate::roc_auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), y_val);
      result.cells[c].mean_auc += auc;
      ++result.cells[c].folds_scored;
    }
  }

  // Resolve "scale" on the whole training set for tie-breaking.
  double scale_gamma = 1.0;
  if (grid.kind == ClassifierKind::kSvm) {
    const auto standardizer = Standardizer::fit(x);
    const auto pca = fit_pca(standardizer.transform(x), pca_cutoff);
    scale_gamma = gamma_scale(pca.transform(standardizer.transform(x)));
  }
  for (auto& cell : result.cells) {
    cell.mean_auc = cell.folds_scored > 0 ? cell.mean_auc / static_cast<double>(cell.folds_scored)
                                          : std::numeric_limits<double>::quiet_NaN();
    cell.gamma_order = cell.hyperparams.gamma ? *cell.hyperparams.gamma : scale_gamma;
  }
  const CellScore* best = &result.cells.front();
  for (const auto& cell : result.cells) {
    const double a = std::isnan(cell.mean_auc) ? -1.0 : cell.mean_auc;
    const double b = std::isnan(best->mean_auc) ? -1.0 : best->mean_auc;
    if (a > b || (a == b && (cell.hyperparams.c < best->hyperparams.c ||
                             (cell.hyperparams.c == best->hyperparams.c && cell.gamma_order < best->gamma_order)))) {
      best = &cell;
    }
  }
  result.best = best->hyperparams;
  return result;
}

}  // namespace respscreen::model
