#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "workbench/gbrt.hpp"
#include "workbench/krr.hpp"
#include "workbench/synthgen.hpp"

namespace workbench {

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);
/// 20 values on [1e-6, 1e2].
std::vector<double> default_lambda_grid();

struct PlSelection {
  std::vector<double> lambda_grid;
  KernelSpec kernel;  // lengthscale resolved on the full source covariates
  std::vector<std::size_t> half1, half2;
  FittedPtr imputer;
  /// KRR imputer only: CV-chosen lambda and per-lambda CV MSE on half 1.
  double imputer_lambda = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> imputer_cv_mse;
  Vector imputed_aux;
  std::vector<KrrModel> candidates;  // one per grid value, fit on half 2
  std::vector<double> selection_scores;
  /// MSE of each candidate against the true mean on the aux points.
  std::vector<double> true_aux_risk;
  std::size_t chosen_index = 0;

  double chosen_lambda() const { return lambda_grid[chosen_index]; }
  const KrrModel& chosen() const { return candidates[chosen_index]; }
};

/// Pseudo-label selection. With imputer == nullptr the imputer is KRR on
/// half 1 with lambda picked from the same grid by 5-fold CV.
PlSelection pl_select(const CovShiftBundle& bundle, const std::vector<double>& lambda_grid,
                      KernelSpec kernel, std::uint64_t seed, const Predictor* imputer = nullptr);

/// pl_select with the aux labels set to the true conditional mean.
PlSelection wang_oracle_select(const CovShiftBundle& bundle, const std::vector<double>& lambda_grid,
                               KernelSpec kernel, std::uint64_t seed);

/// True density ratio at each source row.
Vector importance_weights(const CovShiftBundle& bundle);

std::shared_ptr<const GbrtModel> naive_fit(const CovShiftBundle& bundle, std::uint64_t seed,
                                           const GbrtGrid& grid = {});
std::shared_ptr<const GbrtModel> iw_fit(const CovShiftBundle& bundle, std::uint64_t seed,
                                        const GbrtGrid& grid = {});

/// Prediction MSE on the labeled target test set.
double covshift_mse(const FittedModel& model, const CovShiftBundle& bundle);

/// Columns lambda, selection_score, true_risk.
void write_selection_csv(std::ostream& out, const PlSelection& sel);

}  // namespace workbench
