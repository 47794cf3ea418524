#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "workbench/predictor.hpp"

namespace workbench {

double soft_threshold(double z, double lambda);

/// Lasso objective (1/2n)||y - X b||^2 + lambda ||b||_1 (no intercept).
double lasso_objective(const Matrix& x, const Vector& y, const Vector& beta, double lambda);

/// Largest KKT violation of beta at lambda: |g_j| - lambda for zero
/// coordinates (floored at 0) and |g_j - lambda sign(b_j)| for active ones,
/// where g = X'(y - X b)/n.
double lasso_kkt_violation(const Matrix& x, const Vector& y, const Vector& beta, double lambda);

struct LassoSolveInfo {
  std::size_t sweeps = 0;
  double kkt_violation = 0.0;
};

/// Cyclic coordinate descent from `beta` (warm start, updated in place).
/// Sweeps until the KKT violation is below `tol`. When `objective_trace` is
/// non-null the objective after every sweep is appended.
LassoSolveInfo lasso_cd(const Matrix& x, const Vector& y, double lambda, Vector& beta,
                        double tol = 1e-9, std::vector<double>* objective_trace = nullptr);

struct LassoOptions {
  std::size_t n_lambda = 100;
  double min_ratio = 1e-3;
  double tol = 1e-9;
};

class LassoModel final : public FittedModel {
 public:
  PredictiveDistribution predict(const Matrix& query) const override;

  Vector lambdas;                   // decreasing
  Vector cv_mse;                    // per lambda
  std::size_t chosen_index = 0;
  double lambda = 0.0;
  double intercept = 0.0;
  Vector coef;                      // original scale, length p
  std::vector<Vector> path;         // refit path on standardized kept features
  std::uint64_t fold_seed = 0;
  std::vector<std::size_t> fold_of; // fold id per training row
  double max_kkt_violation = 0.0;   // over every fold, lambda and the refit
  std::vector<std::size_t> dropped_columns;
  std::vector<std::string> warnings;
};

LassoModel fit_lasso_cv(const Dataset& train, std::size_t folds, std::uint64_t seed,
                        const LassoOptions& options = {});

class LassoPredictor final : public Predictor {
 public:
  explicit LassoPredictor(std::uint64_t seed = 0, std::size_t folds = 5) : seed_(seed), folds_(folds) {}
  FittedPtr fit(const Dataset& train) const override;
  std::string name() const override { return "lasso"; }

 private:
  std::uint64_t seed_;
  std::size_t folds_;
};

}  // namespace workbench
