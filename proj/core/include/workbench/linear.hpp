#pragma once

#include <cstddef>
#include <string>

#include "workbench/predictor.hpp"

namespace workbench {

/// Intercept plus slopes.
struct LinearFit {
  double intercept = 0.0;
  Vector coef;

  Vector predict(const Matrix& x) const { return (x * coef).array() + intercept; }
};

/// Ordinary least squares with an intercept, via column-pivoted QR. Throws
/// InvalidArgument when the design (with intercept) is rank deficient.
LinearFit ols_fit(const Matrix& x, const Vector& y);

/// Weighted ridge on a per-feature polynomial basis [x_j, x_j^2, ..., x_j^d];
/// the intercept is unpenalized.
LinearFit poly_ridge_fit(const Matrix& x, const Vector& y, const Vector& weights,
                         std::size_t degree, double lambda);

class LinearModel final : public FittedModel {
 public:
  explicit LinearModel(LinearFit fit) : fit_(std::move(fit)) {}
  PredictiveDistribution predict(const Matrix& query) const override;
  const LinearFit& fit() const { return fit_; }

 private:
  LinearFit fit_;
};

class OlsPredictor final : public Predictor {
 public:
  FittedPtr fit(const Dataset& train) const override;
  std::string name() const override { return "ols"; }
};

/// Polynomial basis model; degree 1 is plain (weighted) ridge regression.
class PolyRidgeModel final : public FittedModel {
 public:
  PolyRidgeModel(LinearFit fit, std::size_t degree) : fit_(std::move(fit)), degree_(degree) {}
  PredictiveDistribution predict(const Matrix& query) const override;

 private:
  LinearFit fit_;
  std::size_t degree_;
};

class PolyRidge final : public Predictor, public WeightedRegressor {
 public:
  explicit PolyRidge(std::size_t degree = 3, double lambda = 1e-8) : degree_(degree), lambda_(lambda) {}
  FittedPtr fit(const Dataset& train) const override;
  FittedPtr fit_weighted(const Dataset& train, const Vector& weights) const override;
  std::string name() const override { return "poly"; }

 private:
  std::size_t degree_;
  double lambda_;
};

/// Expands each column into its first `degree` powers.
Matrix poly_basis(const Matrix& x, std::size_t degree);

}  // namespace workbench
