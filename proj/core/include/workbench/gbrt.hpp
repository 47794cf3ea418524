#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "workbench/predictor.hpp"

namespace workbench {

struct GbrtParams {
  std::size_t trees = 100;
  std::size_t depth = 3;
  double rate = 0.1;
};

struct GbrtGrid {
  std::vector<std::size_t> trees{100, 300};
  std::vector<std::size_t> depths{2, 3};
  std::vector<double> rates{0.05, 0.1};
};

struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// Grows one weighted least-squares tree level by level. Splits go left when
/// x_j <= threshold; thresholds are midpoints between adjacent distinct values.
RegressionTree fit_regression_tree(const Matrix& x, const Vector& target, const Vector& weights,
                                   std::size_t depth);

class GbrtModel final : public FittedModel {
 public:
  PredictiveDistribution predict(const Matrix& query) const override;
  /// Predictions using only the first `trees` trees.
  Vector predict_staged(const Matrix& query, std::size_t trees) const;

  double base = 0.0;
  GbrtParams params;
  std::vector<RegressionTree> trees;
  std::vector<GbrtParams> grid;  // evaluated combinations
  std::vector<double> cv_mse;    // aligned with grid; empty for a fixed fit
};

/// Boosting with fixed hyperparameters. `weights` must be positive if given.
GbrtModel fit_gbrt_fixed(const Dataset& train, const std::optional<Vector>& weights,
                         const GbrtParams& params);

/// Hyperparameters chosen by weighted k-fold CV mean squared error.
GbrtModel fit_gbrt(const Dataset& train, const std::optional<Vector>& weights, const GbrtGrid& grid,
                   std::size_t folds, std::uint64_t seed);

class GbrtRegressor final : public Predictor, public WeightedRegressor {
 public:
  explicit GbrtRegressor(std::uint64_t seed = 0, GbrtGrid grid = {}, std::size_t folds = 5)
      : seed_(seed), grid_(std::move(grid)), folds_(folds) {}
  FittedPtr fit(const Dataset& train) const override;
  FittedPtr fit_weighted(const Dataset& train, const Vector& weights) const override;
  std::string name() const override { return "gbrt"; }

 private:
  std::uint64_t seed_;
  GbrtGrid grid_;
  std::size_t folds_;
};

}  // namespace workbench
