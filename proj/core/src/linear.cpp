#include "workbench/linear.hpp"

#include "workbench/error.hpp"

namespace workbench {

namespace {

Matrix with_intercept(const Matrix& x) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

}  // namespace

LinearFit ols_fit(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw InvalidArgument("ols_fit: row/label mismatch");
  const Matrix d = with_intercept(x);
  Eigen::ColPivHouseholderQR<Matrix> qr(d);
  if (qr.rank() < d.cols()) throw InvalidArgument("ols_fit: design matrix is rank deficient");
  const Vector beta = qr.solve(y);
  return LinearFit{beta(0), beta.tail(x.cols())};
}

Matrix poly_basis(const Matrix& x, std::size_t degree) {
  const auto deg = static_cast<Eigen::Index>(degree);
  Matrix b(x.rows(), x.cols() * deg);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vector power = x.col(j);
    for (Eigen::Index k = 0; k < deg; ++k) {
      b.col(j * deg + k) = power;
      power = power.cwiseProduct(x.col(j));
    }
  }
  return b;
}

LinearFit poly_ridge_fit(const Matrix& x, const Vector& y, const Vector& weights,
                         std::size_t degree, double lambda) {
  if (degree < 1) throw InvalidArgument("poly_ridge_fit: degree must be >= 1");
  if (!(lambda >= 0.0)) throw InvalidArgument("poly_ridge_fit: lambda must be >= 0");
  if (x.rows() != y.size() || weights.size() != y.size()) {
    throw InvalidArgument("poly_ridge_fit: length mismatch");
  }
  if ((weights.array() < 0.0).any()) throw InvalidArgument("poly_ridge_fit: negative weight");
  const Matrix d = with_intercept(poly_basis(x, degree));
  const Matrix dw = d.array().colwise() * weights.array();
  Matrix gram = d.transpose() * dw;
  gram.diagonal().tail(d.cols() - 1).array() += lambda * weights.sum();
  const Vector rhs = dw.transpose() * y;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw NumericalError("poly_ridge_fit: singular system");
  const Vector beta = ldlt.solve(rhs);
  return LinearFit{beta(0), beta.tail(d.cols() - 1)};
}

PredictiveDistribution LinearModel::predict(const Matrix& query) const {
  return PredictiveDistribution::point(fit_.predict(query));
}

FittedPtr OlsPredictor::fit(const Dataset& train) const {
  return std::make_shared<LinearModel>(ols_fit(train.x, train.labels()));
}

PredictiveDistribution PolyRidgeModel::predict(const Matrix& query) const {
  return PredictiveDistribution::point(fit_.predict(poly_basis(query, degree_)));
}

FittedPtr PolyRidge::fit(const Dataset& train) const {
  return fit_weighted(train, Vector::Ones(static_cast<Eigen::Index>(train.rows())));
}

FittedPtr PolyRidge::fit_weighted(const Dataset& train, const Vector& weights) const {
  return std::make_shared<PolyRidgeModel>(
      poly_ridge_fit(train.x, train.labels(), weights, degree_, lambda_), degree_);
}

}  // namespace workbench
