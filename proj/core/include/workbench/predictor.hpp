#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "workbench/dataset.hpp"

namespace workbench {

/// Probability levels of the quantile columns in every PredictiveDistribution.
inline constexpr std::array<double, 5> kQuantileLevels{0.025, 0.25, 0.5, 0.75, 0.975};

/// Per-query predictive mean, standard deviation and quantiles.
struct PredictiveDistribution {
  Vector mean;
  Vector sd;
  Matrix quantiles;  // rows x kQuantileLevels.size()

  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }

  /// Throws InvalidArgument when lengths disagree, values are non-finite,
  /// sd is negative, or a quantile row decreases.
  void validate() const;

  /// Point prediction: sd = 0 and every quantile equal to the mean.
  static PredictiveDistribution point(Vector mean);
  /// Gaussian predictive with quantiles mean + z_q sd.
  static PredictiveDistribution gaussian(Vector mean, Vector sd);
};

/// Standard normal quantile function.
double normal_quantile(double p);

/// A fitted model. Immutable after construction; predict may be called from
/// many threads at once.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual PredictiveDistribution predict(const Matrix& query) const = 0;

  /// Convenience: predictive means only.
  Vector predict_mean(const Matrix& query) const { return predict(query).mean; }
};

using FittedPtr = std::shared_ptr<const FittedModel>;

/// Learner that turns a labeled dataset into a FittedModel. For classification
/// tasks the predictive mean is P(Y = 1 | x).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual FittedPtr fit(const Dataset& train) const = 0;
  virtual std::string name() const = 0;
};

/// Regression learner that accepts per-sample weights.
class WeightedRegressor {
 public:
  virtual ~WeightedRegressor() = default;
  virtual FittedPtr fit_weighted(const Dataset& train, const Vector& weights) const = 0;
  virtual std::string name() const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;
using WeightedRegressorPtr = std::shared_ptr<const WeightedRegressor>;

/// Model that predicts a fixed function of each query row.
class FunctionModel final : public FittedModel {
 public:
  using Fn = std::function<double(const Vector&)>;
  explicit FunctionModel(Fn f) : f_(std::move(f)) {}
  PredictiveDistribution predict(const Matrix& query) const override;

 private:
  Fn f_;
};

/// Ignores the training data and always returns the same function; used for
/// oracle nuisances.
class FixedFunctionPredictor final : public Predictor, public WeightedRegressor {
 public:
  FixedFunctionPredictor(std::string name, FunctionModel::Fn f)
      : name_(std::move(name)), model_(std::make_shared<FunctionModel>(std::move(f))) {}
  FittedPtr fit(const Dataset&) const override { return model_; }
  FittedPtr fit_weighted(const Dataset&, const Vector&) const override { return model_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  FittedPtr model_;
};

}  // namespace workbench
