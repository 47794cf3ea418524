#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "workbench/predictor.hpp"
#include "workbench/synthgen.hpp"

namespace workbench {

using Labels = std::vector<int>;

/// Converts a {0,1}-valued label vector, throwing on anything else.
Labels to_labels(const Vector& y);

struct LdaModel {
  double pi = 0.5;  // P(Y = 1)
  Vector mu0, mu1;
  Matrix sigma;     // pooled, divisor n - 2
  double ridge = 0.0;  // jitter added to sigma's diagonal, 0 if none
  Vector direction;    // sigma^{-1} (mu1 - mu0)
  double offset = 0.0; // log(pi / (1 - pi)) - mid' direction

  /// log(pi/(1-pi)) + (x - (mu0 + mu1)/2)' sigma^{-1} (mu1 - mu0), per row.
  Vector score(const Matrix& x) const;
};

LdaModel fit_lda(const Dataset& train);
/// Plug-in model from given parameters.
LdaModel lda_from_parameters(double pi, const Vector& mu0, const Vector& mu1, const Matrix& sigma);
/// Class 1 where score >= 0.
Labels lda_classify(const LdaModel& model, const Matrix& query);

struct KnnModel {
  std::size_t k = 1;
  Matrix x;
  Vector y;
  std::vector<std::size_t> grid;
  std::vector<double> cv_accuracy;  // aligned with grid
};

/// Ten equally spaced integers between floor(n^1/4) and floor(n^3/4), rounded
/// and deduplicated.
std::vector<std::size_t> knn_grid(std::size_t n);

/// Majority vote over the k nearest training rows (Euclidean; distance ties
/// broken by lower row index); vote ties go to class 1.
Labels knn_vote(const Matrix& train_x, const Vector& train_y, const Matrix& query, std::size_t k);

KnnModel fit_knn_cv(const Dataset& train, std::size_t folds, std::uint64_t seed);
Labels knn_classify(const KnnModel& model, const Matrix& query);

/// Bayes rule with the true regression function of the model.
Labels bayes_classify(NoiseModel model, const Matrix& query);

}  // namespace workbench
