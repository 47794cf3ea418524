#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "workbench/classifiers.hpp"
#include "workbench/error.hpp"

using namespace workbench;

namespace {

// Independent vote: full sort by (distance, index).
int brute_vote(const Matrix& x, const Vector& y, const Vector& q, std::size_t k) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> d(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) d[i] = (x.row(static_cast<Eigen::Index>(i)).transpose() - q).norm();
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] != d[b] ? d[a] < d[b] : a < b; });
  double ones = 0;
  for (std::size_t i = 0; i < k; ++i) ones += y(static_cast<Eigen::Index>(idx[i]));
  return ones >= k - ones ? 1 : 0;
}

}  // namespace

TEST(Lda, TruePlugInAtOriginIsClassOne) {
  const auto m = lda_from_parameters(0.9, m1_class_mean(0), m1_class_mean(1), Matrix::Identity(5, 5));
  EXPECT_NEAR(m.score(Matrix::Zero(1, 5))(0), std::log(9.0), 1e-12);
  EXPECT_EQ(lda_classify(m, Matrix::Zero(1, 5))[0], 1);
}

TEST(Lda, EqualMeansReduceToPrior) {
  const auto lo = lda_from_parameters(0.4, Vector::Zero(2), Vector::Zero(2), Matrix::Identity(2, 2));
  const auto hi = lda_from_parameters(0.6, Vector::Zero(2), Vector::Zero(2), Matrix::Identity(2, 2));
  const Matrix q = wbtest::random_normal_matrix(20, 2, 1);
  for (int v : lda_classify(lo, q)) EXPECT_EQ(v, 0);
  for (int v : lda_classify(hi, q)) EXPECT_EQ(v, 1);
}

TEST(Lda, SymmetricTrainingBoundaryAtMidpoint) {
  Matrix x(4, 1);
  x << -2, -1, 1, 2;
  Vector y(4);
  y << 0, 0, 1, 1;
  const auto m = fit_lda(Dataset(x, y));
  EXPECT_EQ(m.pi, 0.5);
  EXPECT_NEAR(m.sigma(0, 0), 0.5, 1e-15);  // (4 * 0.25) / (n - 2)
  EXPECT_NEAR(m.score(Matrix::Zero(1, 1))(0), 0.0, 1e-15);
  EXPECT_EQ(lda_classify(m, Matrix::Constant(1, 1, 1e-9))[0], 1);
  EXPECT_EQ(lda_classify(m, Matrix::Constant(1, 1, -1e-9))[0], 0);
}

TEST(Lda, PlugInMatchesBayesM1) {
  const auto m = lda_from_parameters(kM1Prior, m1_class_mean(0), m1_class_mean(1), Matrix::Identity(5, 5));
  const auto b = gen_labelnoise(NoiseModel::M1, 10, 0.0, 5000, 8);
  EXPECT_EQ(lda_classify(m, b.test.x), bayes_classify(NoiseModel::M1, b.test.x));
}

TEST(Lda, SingularCovarianceGetsRidge) {
  Matrix x(6, 2);
  x << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
  Vector y(6);
  y << 0, 0, 0, 1, 1, 1;
  const auto m = fit_lda(Dataset(x, y));
  EXPECT_GT(m.ridge, 0.0);
  EXPECT_THROW(fit_lda(Dataset(x, Vector::Zero(6))), InvalidArgument);
}

TEST(Knn, GridEndpoints) {
  const auto g = knn_grid(300);
  EXPECT_EQ(g.front(), 4u);
  EXPECT_EQ(g.back(), 72u);
  EXPECT_LE(g.size(), 10u);
  EXPECT_THROW(knn_grid(9), InvalidArgument);
}

TEST(Knn, OneNeighbourReturnsOwnLabel) {
  const Matrix x = wbtest::random_normal_matrix(15, 3, 2);
  Vector y(15);
  for (int i = 0; i < 15; ++i) y(i) = i % 2;
  const auto pred = knn_vote(x, y, x, 1);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(pred[static_cast<std::size_t>(i)], i % 2);
}

TEST(Knn, SeparatedClustersPerfectAccuracy) {
  Matrix x = wbtest::random_normal_matrix(20, 2, 3) * 0.1;
  Vector y(20);
  for (int i = 0; i < 20; ++i) {
    y(i) = i < 10 ? 0 : 1;
    x(i, 0) += i < 10 ? -5 : 5;
  }
  const auto m = fit_knn_cv(Dataset(x, y), 5, 1);
  for (double acc : m.cv_accuracy) EXPECT_EQ(acc, 1.0);
  EXPECT_EQ(knn_classify(m, x), to_labels(y));
}

TEST(Knn, MatchesBruteForceVote) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto n = static_cast<Eigen::Index>(10 + seed * 2);
    const Matrix x = wbtest::random_normal_matrix(n, 2, seed);
    Vector y(n);
    auto rng = make_rng(seed);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = bernoulli(rng, 0.5);
    const Matrix q = wbtest::random_normal_matrix(25, 2, seed + 99);
    for (std::size_t k : knn_grid(static_cast<std::size_t>(n))) {
      const auto pred = knn_vote(x, y, q, k);
      for (Eigen::Index i = 0; i < q.rows(); ++i)
        ASSERT_EQ(pred[static_cast<std::size_t>(i)], brute_vote(x, y, q.row(i).transpose(), k));
    }
  }
}

TEST(Knn, VoteTieGoesToClassOne) {
  Matrix x(2, 1);
  x << -1, 1;
  Vector y(2);
  y << 0, 1;
  EXPECT_EQ(knn_vote(x, y, Matrix::Zero(1, 1), 2)[0], 1);
}

TEST(Bayes, M2Examples) {
  Matrix q(2, 5);
  q << 0.5, 0.5, 0.1, 0.1, 0.1, 0, 0, 0.3, 0.3, 0.3;
  const auto c = bayes_classify(NoiseModel::M2, q);
  EXPECT_EQ(c[0], 0);
  EXPECT_EQ(c[1], 1);
  EXPECT_EQ(bayes_classify(NoiseModel::M1, m1_class_mean(1).transpose())[0], 1);
}
