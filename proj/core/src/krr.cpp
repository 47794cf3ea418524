#include "workbench/krr.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "workbench/error.hpp"

namespace workbench {

double median_heuristic(const Matrix& x) {
  const auto n = x.rows();
  if (n < 2) throw InvalidArgument("median_heuristic: need at least 2 rows");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  const std::size_t m = d.size();
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m / 2), d.end());
  double med = d[m / 2];
  if (m % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m / 2));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) throw InvalidArgument("median_heuristic: all points coincide");
  return med;
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("kernel_matrix: dimension mismatch");
  if (spec.type == KernelSpec::Type::Linear) return a * b.transpose();
  if (!(spec.lengthscale > 0.0)) throw InvalidArgument("kernel_matrix: unresolved lengthscale");
  const double g = 0.5 / (spec.lengthscale * spec.lengthscale);
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      k(i, j) = std::exp(-g * (a.row(i) - b.row(j)).squaredNorm());
  return k;
}

PredictiveDistribution KrrModel::predict(const Matrix& query) const {
  return PredictiveDistribution::point(kernel_matrix(kernel_, query, train_x_) * alpha_);
}

KrrModel fit_krr(const Dataset& train, KernelSpec kernel, double lambda) {
  train.validate();
  if (!(lambda > 0.0)) throw InvalidArgument("fit_krr: lambda must be > 0");
  if (kernel.type == KernelSpec::Type::Rbf && kernel.lengthscale == 0.0)
    kernel.lengthscale = median_heuristic(train.x);
  const Vector& y = train.labels();
  const auto n = train.x.rows();
  Matrix a = kernel_matrix(kernel, train.x, train.x);
  a.diagonal().array() += static_cast<double>(n) * lambda;

  Eigen::LLT<Matrix> llt(a);
  const double scale = a.diagonal().mean();
  double jitter = 0.0;
  for (double rel = 1e-12; llt.info() != Eigen::Success; rel *= 10.0) {
    if (rel > 1e-6) throw NumericalError("fit_krr: system singular beyond jitter budget");
    jitter = rel * scale;
    Matrix aj = a;
    aj.diagonal().array() += jitter;
    llt.compute(aj);
  }
  Vector alpha = llt.solve(y);
  Vector r = y - a * alpha;
  for (int it = 0; it < 3 && r.lpNorm<Eigen::Infinity>() > 0.0; ++it) {
    alpha += llt.solve(r);
    r = y - a * alpha;
  }
  return KrrModel(kernel, lambda, train.x, std::move(alpha), r.lpNorm<Eigen::Infinity>());
}

FittedPtr KrrPredictor::fit(const Dataset& train) const {
  return std::make_shared<KrrModel>(fit_krr(train, kernel_, lambda_));
}

}  // namespace workbench
