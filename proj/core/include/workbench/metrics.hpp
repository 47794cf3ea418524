#pragma once

#include <cstddef>
#include <vector>

#include "workbench/classifiers.hpp"
#include "workbench/predictor.hpp"
#include "workbench/synthgen.hpp"

namespace workbench {

struct BiasVariance {
  double bias2 = 0.0;
  double variance = 0.0;
  /// Per-component parts; the scalars are their sums.
  Vector bias2_by_component;
  Vector variance_by_component;
};

/// bias2 = |mean(theta_r) - theta*|^2, variance = mean_r |theta_r - mean|^2.
BiasVariance bias_variance(const std::vector<Vector>& estimates, const Vector& theta_star);

/// Conditional risk mean over test x of eta 1{C=0} + (1 - eta) 1{C=1}.
double conditional_risk(const Labels& predicted, const NoisyLabelBundle& bundle);
/// Risk of `predicted` on the test set minus the Bayes rule's risk.
double excess_risk(const Labels& predicted, const NoisyLabelBundle& bundle);
/// Raw 0/1 error against the clean test labels.
double test_error(const Labels& predicted, const NoisyLabelBundle& bundle);

struct SurrogateFit {
  double r2 = 0.0;
  double intercept = 0.0;
  Vector coef;  // one per relevant column, in the given order
};

/// OLS of the model's predictions on the relevant test columns.
SurrogateFit linear_surrogate(const FittedModel& model, const Dataset& test,
                              const std::vector<std::size_t>& relevant);
/// Same, from precomputed predictions.
SurrogateFit linear_surrogate(const Vector& predictions, const Matrix& x,
                              const std::vector<std::size_t>& relevant);

inline constexpr std::size_t kDefaultAleBins = 40;

struct AleCurve {
  std::size_t feature = 0;
  std::vector<double> edges;        // strictly increasing, bins + 1 values
  std::vector<double> edge_values;  // centered accumulated effect at each edge
  std::vector<double> values;       // per bin: mean of its two edge values
  std::vector<std::size_t> counts;  // points per bin

  std::size_t bins() const { return counts.size(); }
};

/// Accumulated local effects with quantile bins. Repeated quantiles are merged,
/// so fewer than `bins` bins may result. Centered so the count-weighted mean of
/// `values` is zero.
AleCurve ale(const FittedModel& model, const Dataset& data, std::size_t feature,
             std::size_t bins = kDefaultAleBins);

}  // namespace workbench
