#include "workbench/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "workbench/error.hpp"
#include "workbench/random.hpp"

namespace workbench {

namespace {

struct Standardized {
  Matrix x;
  Vector y;
  Vector mean;
  Vector scale;  // 0 marks a column that is constant here
  double y_mean = 0.0;
};

Standardized standardize(const Matrix& x, const Vector& y) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.x = x.rowwise() - s.mean.transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(s.x.col(j).squaredNorm() / n);
    s.scale(j) = sd > 1e-12 * (1.0 + std::abs(s.mean(j))) ? sd : 0.0;
    if (s.scale(j) > 0.0) s.x.col(j) /= sd;
    else s.x.col(j).setZero();
  }
  s.y_mean = y.mean();
  s.y = y.array() - s.y_mean;
  return s;
}

Matrix apply_standardization(const Matrix& x, const Standardized& s) {
  Matrix z = x.rowwise() - s.mean.transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (s.scale(j) > 0.0) z.col(j) /= s.scale(j);
    else z.col(j).setZero();
  }
  return z;
}

}  // namespace

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

double lasso_objective(const Matrix& x, const Vector& y, const Vector& beta, double lambda) {
  const double n = static_cast<double>(x.rows());
  return (y - x * beta).squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

double lasso_kkt_violation(const Matrix& x, const Vector& y, const Vector& beta, double lambda) {
  const double n = static_cast<double>(x.rows());
  const Vector g = x.transpose() * (y - x * beta) / n;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(g(j)) - lambda)
                                    : std::abs(g(j) - lambda * (beta(j) > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

LassoSolveInfo lasso_cd(const Matrix& x, const Vector& y, double lambda, Vector& beta, double tol,
                        std::vector<double>* objective_trace) {
  const auto p = x.cols();
  const double n = static_cast<double>(x.rows());
  if (beta.size() != p) beta = Vector::Zero(p);
  Vector colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) colsq(j) = x.col(j).squaredNorm() / n;
  Vector r = y - x * beta;
  LassoSolveInfo info;
  for (std::size_t sweep = 1; sweep <= 100000; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (colsq(j) == 0.0) {
        beta(j) = 0.0;
        continue;
      }
      const double old = beta(j);
      const double z = x.col(j).dot(r) / n + colsq(j) * old;
      const double nb = soft_threshold(z, lambda) / colsq(j);
      if (nb != old) {
        r -= (nb - old) * x.col(j);
        beta(j) = nb;
      }
    }
    info.sweeps = sweep;
    if (objective_trace) objective_trace->push_back(lasso_objective(x, y, beta, lambda));
    // Refresh the residual now and then to stop drift.
    if (sweep % 50 == 0) r = y - x * beta;
    info.kkt_violation = lasso_kkt_violation(x, y, beta, lambda);
    if (info.kkt_violation <= tol) return info;
  }
  throw NotConverged("lasso_cd", info.sweeps, info.kkt_violation);
}

PredictiveDistribution LassoModel::predict(const Matrix& query) const {
  if (query.cols() != coef.size()) throw InvalidArgument("lasso: query dimension mismatch");
  return PredictiveDistribution::point((query * coef).array() + intercept);
}

LassoModel fit_lasso_cv(const Dataset& train, std::size_t folds, std::uint64_t seed,
                        const LassoOptions& options) {
  train.validate();
  const Vector& y = train.labels();
  const std::size_t n = train.rows();
  if (folds < 2) throw InvalidArgument("fit_lasso_cv: folds must be >= 2");
  if (n < folds) throw InvalidArgument("fit_lasso_cv: fewer rows than folds");
  if (options.n_lambda < 1) throw InvalidArgument("fit_lasso_cv: empty lambda grid");

  LassoModel m;
  m.fold_seed = seed;
  const Standardized full0 = standardize(train.x, y);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < train.x.cols(); ++j) {
    if (full0.scale(j) > 0.0) {
      kept.push_back(j);
    } else {
      m.dropped_columns.push_back(static_cast<std::size_t>(j));
      m.warnings.push_back("constant feature column x" + std::to_string(j + 1) + " dropped");
    }
  }
  if (kept.empty()) throw InvalidArgument("fit_lasso_cv: every feature column is constant");
  Matrix xk(train.x.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) xk.col(static_cast<Eigen::Index>(k)) = train.x.col(kept[k]);
  const Standardized full = standardize(xk, y);

  const double nn = static_cast<double>(n);
  const double lambda_max = (full.x.transpose() * full.y).lpNorm<Eigen::Infinity>() / nn;
  const auto nl = static_cast<Eigen::Index>(options.n_lambda);
  m.lambdas.resize(nl);
  for (Eigen::Index i = 0; i < nl; ++i) {
    const double t = nl == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(nl - 1);
    m.lambdas(i) = lambda_max * std::pow(options.min_ratio, t);
  }
  if (lambda_max == 0.0) m.lambdas.setZero();

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed);
  shuffle(perm, rng);
  m.fold_of.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) m.fold_of[perm[i]] = i % folds;

  m.cv_mse = Vector::Zero(nl);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (m.fold_of[i] == f ? te : tr).push_back(i);
    Matrix xtr(static_cast<Eigen::Index>(tr.size()), xk.cols());
    Vector ytr(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = xk.row(static_cast<Eigen::Index>(tr[i]));
      ytr(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(tr[i]));
    }
    const Standardized s = standardize(xtr, ytr);
    Matrix xte(static_cast<Eigen::Index>(te.size()), xk.cols());
    Vector yte(static_cast<Eigen::Index>(te.size()));
    for (std::size_t i = 0; i < te.size(); ++i) {
      xte.row(static_cast<Eigen::Index>(i)) = xk.row(static_cast<Eigen::Index>(te[i]));
      yte(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(te[i]));
    }
    const Matrix zte = apply_standardization(xte, s);
    Vector beta = Vector::Zero(xk.cols());
    for (Eigen::Index l = 0; l < nl; ++l) {
      const LassoSolveInfo info = lasso_cd(s.x, s.y, m.lambdas(l), beta, options.tol);
      m.max_kkt_violation = std::max(m.max_kkt_violation, info.kkt_violation);
      const Vector pred = (zte * beta).array() + s.y_mean;
      m.cv_mse(l) += (yte - pred).squaredNorm();
    }
  }
  m.cv_mse /= nn;
  Eigen::Index best = 0;
  for (Eigen::Index l = 1; l < nl; ++l)
    if (m.cv_mse(l) < m.cv_mse(best)) best = l;
  m.chosen_index = static_cast<std::size_t>(best);
  m.lambda = m.lambdas(best);

  Vector beta = Vector::Zero(xk.cols());
  Vector chosen;
  for (Eigen::Index l = 0; l < nl; ++l) {
    const LassoSolveInfo info = lasso_cd(full.x, full.y, m.lambdas(l), beta, options.tol);
    m.max_kkt_violation = std::max(m.max_kkt_violation, info.kkt_violation);
    m.path.push_back(beta);
    if (l == best) chosen = beta;
  }
  m.coef = Vector::Zero(train.x.cols());
  m.intercept = full.y_mean;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double c = chosen(kk) / full.scale(kk);
    m.coef(kept[k]) = c;
    m.intercept -= c * full.mean(kk);
  }
  return m;
}

FittedPtr LassoPredictor::fit(const Dataset& train) const {
  return std::make_shared<LassoModel>(fit_lasso_cv(train, folds_, seed_));
}

}  // namespace workbench
