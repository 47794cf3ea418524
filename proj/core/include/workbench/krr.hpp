#pragma once

#include <memory>
#include <string>

#include "workbench/predictor.hpp"

namespace workbench {

struct KernelSpec {
  enum class Type { Rbf, Linear };
  Type type = Type::Rbf;
  /// RBF lengthscale; 0 means "median heuristic on the training inputs".
  double lengthscale = 0.0;

  static KernelSpec rbf(double lengthscale = 0.0) { return {Type::Rbf, lengthscale}; }
  static KernelSpec linear() { return {Type::Linear, 0.0}; }
};

/// Median of the pairwise Euclidean distances over i < j.
double median_heuristic(const Matrix& x);

/// Gram matrix k(a_i, b_j). The spec must be resolved (lengthscale > 0 for RBF).
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& a, const Matrix& b);

/// Kernel ridge regression without intercept: (K + n lambda I) alpha = y.
class KrrModel final : public FittedModel {
 public:
  KrrModel(KernelSpec kernel, double lambda, Matrix train_x, Vector alpha, double residual)
      : kernel_(kernel), lambda_(lambda), train_x_(std::move(train_x)), alpha_(std::move(alpha)),
        residual_(residual) {}

  PredictiveDistribution predict(const Matrix& query) const override;

  const KernelSpec& kernel() const { return kernel_; }
  double lambda() const { return lambda_; }
  const Vector& alpha() const { return alpha_; }
  /// ||(K + n lambda I) alpha - y||_inf after refinement.
  double residual() const { return residual_; }

 private:
  KernelSpec kernel_;
  double lambda_;
  Matrix train_x_;
  Vector alpha_;
  double residual_;
};

KrrModel fit_krr(const Dataset& train, KernelSpec kernel, double lambda);

class KrrPredictor final : public Predictor {
 public:
  KrrPredictor(KernelSpec kernel, double lambda) : kernel_(kernel), lambda_(lambda) {}
  FittedPtr fit(const Dataset& train) const override;
  std::string name() const override { return "krr"; }

 private:
  KernelSpec kernel_;
  double lambda_;
};

}  // namespace workbench
