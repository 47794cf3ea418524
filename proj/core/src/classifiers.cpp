#include "workbench/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "workbench/error.hpp"
#include "workbench/random.hpp"

namespace workbench {

Labels to_labels(const Vector& y) {
  Labels out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) out[static_cast<std::size_t>(i)] = 0;
    else if (y(i) == 1.0) out[static_cast<std::size_t>(i)] = 1;
    else throw InvalidArgument("labels must be 0 or 1");
  }
  return out;
}

Vector LdaModel::score(const Matrix& x) const {
  if (x.cols() != direction.size()) throw InvalidArgument("lda: query dimension mismatch");
  return (x * direction).array() + offset;
}

LdaModel lda_from_parameters(double pi, const Vector& mu0, const Vector& mu1, const Matrix& sigma) {
  if (!(pi > 0.0 && pi < 1.0)) throw InvalidArgument("lda: class prior must lie in (0, 1)");
  if (mu0.size() != mu1.size() || sigma.rows() != mu0.size() || sigma.cols() != mu0.size())
    throw InvalidArgument("lda: parameter dimension mismatch");
  LdaModel m;
  m.pi = pi;
  m.mu0 = mu0;
  m.mu1 = mu1;
  m.sigma = sigma;
  const auto p = sigma.rows();
  Eigen::LDLT<Matrix> ldlt(sigma);
  const double tr = sigma.trace();
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(tr, 1e-300);
  if (singular) {
    m.ridge = 1e-8 * tr / static_cast<double>(p);
    if (!(m.ridge > 0.0)) m.ridge = 1e-8;
    Matrix s = sigma;
    s.diagonal().array() += m.ridge;
    ldlt.compute(s);
    if (ldlt.info() != Eigen::Success) throw NumericalError("lda: covariance singular after ridge");
  }
  m.direction = ldlt.solve(mu1 - mu0);
  m.offset = std::log(pi / (1.0 - pi)) - 0.5 * (mu0 + mu1).dot(m.direction);
  return m;
}

LdaModel fit_lda(const Dataset& train) {
  train.validate();
  const Labels y = to_labels(train.labels());
  const auto n = train.x.rows();
  const auto p = train.x.cols();
  Eigen::Index n1 = 0;
  for (int v : y) n1 += v;
  const Eigen::Index n0 = n - n1;
  if (n0 == 0 || n1 == 0) throw InvalidArgument("fit_lda: both classes must be present");
  if (n < p + 2) throw InvalidArgument("fit_lda: need n >= p + 2");
  Vector mu0 = Vector::Zero(p), mu1 = Vector::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) (y[static_cast<std::size_t>(i)] ? mu1 : mu0) += train.x.row(i).transpose();
  mu0 /= static_cast<double>(n0);
  mu1 /= static_cast<double>(n1);
  Matrix centered(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    centered.row(i) = train.x.row(i) - (y[static_cast<std::size_t>(i)] ? mu1 : mu0).transpose();
  Matrix sigma = centered.transpose() * centered / static_cast<double>(n - 2);
  sigma = 0.5 * (sigma + sigma.transpose());
  return lda_from_parameters(static_cast<double>(n1) / static_cast<double>(n), mu0, mu1, sigma);
}

Labels lda_classify(const LdaModel& model, const Matrix& query) {
  const Vector s = model.score(query);
  Labels out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) >= 0.0 ? 1 : 0;
  return out;
}

std::vector<std::size_t> knn_grid(std::size_t n) {
  if (n < 10) throw InvalidArgument("knn_grid: n too small for grid construction (need n >= 10)");
  const double nd = static_cast<double>(n);
  auto lo = static_cast<std::size_t>(std::floor(std::pow(nd, 0.25) + 1e-12));
  auto hi = static_cast<std::size_t>(std::floor(std::pow(nd, 0.75) + 1e-12));
  lo = std::max<std::size_t>(lo, 1);
  hi = std::max(hi, lo);
  std::vector<std::size_t> grid;
  for (int i = 0; i < 10; ++i) {
    const double v = static_cast<double>(lo) + static_cast<double>(i) * static_cast<double>(hi - lo) / 9.0;
    const auto k = static_cast<std::size_t>(std::llround(v));
    if (grid.empty() || grid.back() != k) grid.push_back(k);
  }
  return grid;
}

namespace {

// Neighbor indices of `q` sorted by (squared distance, index), first `k`.
std::vector<std::size_t> nearest(const Matrix& x, const std::vector<std::size_t>& pool,
                                 const Eigen::RowVectorXd& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(pool.size());
  for (std::size_t i : pool) d.emplace_back((x.row(static_cast<Eigen::Index>(i)) - q).squaredNorm(), i);
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace

Labels knn_vote(const Matrix& train_x, const Vector& train_y, const Matrix& query, std::size_t k) {
  if (k < 1) throw InvalidArgument("knn: k must be >= 1");
  if (static_cast<Eigen::Index>(k) > train_x.rows()) throw InvalidArgument("knn: k exceeds training size");
  if (query.cols() != train_x.cols()) throw InvalidArgument("knn: query dimension mismatch");
  std::vector<std::size_t> pool(static_cast<std::size_t>(train_x.rows()));
  std::iota(pool.begin(), pool.end(), 0);
  Labels out(static_cast<std::size_t>(query.rows()));
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    std::size_t ones = 0;
    for (std::size_t i : nearest(train_x, pool, query.row(q), k))
      ones += train_y(static_cast<Eigen::Index>(i)) == 1.0 ? 1 : 0;
    out[static_cast<std::size_t>(q)] = 2 * ones >= k ? 1 : 0;
  }
  return out;
}

KnnModel fit_knn_cv(const Dataset& train, std::size_t folds, std::uint64_t seed) {
  train.validate();
  to_labels(train.labels());
  const std::size_t n = train.rows();
  if (folds < 2 || folds > n) throw InvalidArgument("fit_knn_cv: invalid fold count");
  KnnModel m;
  m.grid = knn_grid(n);
  m.x = train.x;
  m.y = train.labels();
  const std::size_t kmax = m.grid.back();

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed);
  shuffle(perm, rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  std::vector<std::size_t> correct(m.grid.size(), 0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i)
      if (fold_of[i] != f) pool.push_back(i);
    if (pool.size() < kmax) throw InvalidArgument("fit_knn_cv: fold too small for the k grid");
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) continue;
      const auto nb = nearest(m.x, pool, m.x.row(static_cast<Eigen::Index>(i)), kmax);
      std::vector<std::size_t> cum(kmax + 1, 0);
      for (std::size_t j = 0; j < kmax; ++j) cum[j + 1] = cum[j] + (m.y(static_cast<Eigen::Index>(nb[j])) == 1.0);
      const int truth = m.y(static_cast<Eigen::Index>(i)) == 1.0;
      for (std::size_t g = 0; g < m.grid.size(); ++g) {
        const std::size_t k = m.grid[g];
        const int pred = 2 * cum[k] >= k ? 1 : 0;
        correct[g] += pred == truth;
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 0; g < m.grid.size(); ++g) {
    m.cv_accuracy.push_back(static_cast<double>(correct[g]) / static_cast<double>(n));
    if (correct[g] > correct[best]) best = g;
  }
  m.k = m.grid[best];
  return m;
}

Labels knn_classify(const KnnModel& model, const Matrix& query) {
  return knn_vote(model.x, model.y, query, model.k);
}

Labels bayes_classify(NoiseModel model, const Matrix& query) {
  if (query.cols() != static_cast<Eigen::Index>(kNoiseDim))
    throw InvalidArgument("bayes_classify: query must have 5 columns");
  Labels out(static_cast<std::size_t>(query.rows()));
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    const Vector x = query.row(i).transpose();
    out[static_cast<std::size_t>(i)] =
        model == NoiseModel::M1 ? (m1_discriminant(x) >= 0.0 ? 1 : 0) : (noise_eta(model, x) > 0.5 ? 1 : 0);
  }
  return out;
}

}  // namespace workbench
