#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "workbench/error.hpp"
#include "workbench/krr.hpp"
#include "workbench/lasso.hpp"
#include "workbench/linear.hpp"
#include "workbench/synthgen.hpp"

using namespace workbench;

TEST(Krr, OnePointDualCoefficient) {
  Matrix x(1, 1);
  x << 0.4;
  Vector y(1);
  y << 3.0;
  const auto m = fit_krr(Dataset(x, y), KernelSpec::rbf(1.0), 0.25);
  EXPECT_NEAR(m.alpha()(0), 3.0 / 1.25, 1e-14);
}

TEST(Krr, IdentityGramDiagonalSolve) {
  // Orthonormal rows under the linear kernel give K = I.
  const Matrix x = Matrix::Identity(4, 4);
  Vector y(4);
  y << 1, -2, 3, 0.5;
  const double lambda = 0.3;
  const auto m = fit_krr(Dataset(x, y), KernelSpec::linear(), lambda);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(m.alpha()(i), y(i) / (1 + 4 * lambda), 1e-14);
}

TEST(Krr, HeavyRidgeShrinksToZero) {
  const Matrix x = wbtest::random_normal_matrix(30, 2, 1);
  const Vector y = (x.col(0).array() + 5.0).matrix();
  const auto m = fit_krr(Dataset(x, y), KernelSpec::rbf(), 1e8);
  EXPECT_LT(m.predict(x).mean.lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Krr, DualResidualIsSmall) {
  const auto b = gen_covshift(MeanFn::F3, 250, 10, 10, 2);
  for (double lambda : {1e-6, 1e-3, 1.0, 100.0}) {
    const auto m = fit_krr(b.source, KernelSpec::rbf(), lambda);
    EXPECT_LT(m.residual(), 1e-8) << lambda;
    const Matrix k = kernel_matrix(m.kernel(), b.source.x, b.source.x);
    const Vector r = (k + 250 * lambda * Matrix::Identity(250, 250)) * m.alpha() - *b.source.y;
    EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-8) << lambda;
  }
  EXPECT_THROW(fit_krr(b.source, KernelSpec::rbf(), 0.0), InvalidArgument);
}

TEST(Krr, MedianHeuristic) {
  Matrix x(3, 1);
  x << 0, 1, 3;  // distances 1, 3, 2
  EXPECT_EQ(median_heuristic(x), 2.0);
}

TEST(Lasso, AboveLambdaMaxAllZero) {
  const auto d = gen_sparse_linear(10, 2, BetaType::II, CovType::Identity, 3.0, 100, 10, 1);
  const Matrix x = d.train.x.rowwise() - d.train.x.colwise().mean();
  const Vector y = (d.train.y->array() - d.train.y->mean()).matrix();
  const double lmax = (x.transpose() * y).lpNorm<Eigen::Infinity>() / 100.0;
  Vector beta = Vector::Zero(10);
  lasso_cd(x, y, lmax * 1.0000001, beta);
  EXPECT_EQ(beta, Vector::Zero(10));
  const auto m = fit_lasso_cv(d.train, 5, 1);
  EXPECT_EQ(m.path.front(), Vector::Zero(10));
}

TEST(Lasso, OrthonormalDesignSoftThresholds) {
  const double n = 16;
  Matrix x = Matrix::Zero(16, 4);
  for (int j = 0; j < 4; ++j) x.block(4 * j, j, 4, 1).setConstant(2.0);  // x_j'x_j / n = 1
  Vector y = wbtest::random_normal_vector(16, 3);
  const double lambda = 0.2;
  Vector beta;
  lasso_cd(x, y, lambda, beta, 1e-14);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(beta(j), soft_threshold(x.col(j).dot(y) / n, lambda), 1e-14);
}

TEST(Lasso, ObjectiveMonotoneAcrossSweeps) {
  const auto d = gen_sparse_linear(30, 5, BetaType::I, CovType::Banded, 1.0, 80, 10, 2);
  Vector beta;
  std::vector<double> trace;
  lasso_cd(d.train.x, *d.train.y, 0.01, beta, 1e-10, &trace);
  ASSERT_GT(trace.size(), 1u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-15 * std::abs(trace[i - 1]));
}

TEST(Lasso, NoiselessSparseRecovery) {
  const auto d = gen_sparse_linear(20, 1, BetaType::II, CovType::Identity, 1.0, 200, 500, 3);
  Dataset train(d.train.x, d.train.x.col(0));
  const auto m = fit_lasso_cv(train, 5, 4);
  const Vector truth = d.test.x.col(0);
  const Vector pred = m.predict(d.test.x).mean;
  const double r2 = 1 - (truth - pred).squaredNorm() / (truth.array() - truth.mean()).square().sum();
  EXPECT_GT(r2, 0.999);
  EXPECT_LE(m.max_kkt_violation, 1e-6);
  EXPECT_EQ(m.fold_seed, 4u);
}

TEST(Lasso, ConstantColumnDroppedWithWarning) {
  auto d = gen_sparse_linear(5, 1, BetaType::II, CovType::Identity, 2.0, 60, 10, 5);
  d.train.x.col(3).setConstant(7.0);
  const auto m = fit_lasso_cv(d.train, 3, 1);
  ASSERT_EQ(m.dropped_columns.size(), 1u);
  EXPECT_EQ(m.dropped_columns[0], 3u);
  EXPECT_EQ(m.coef(3), 0.0);
  EXPECT_FALSE(m.warnings.empty());
  EXPECT_THROW(fit_lasso_cv(d.train.subset({0, 1}), 3, 1), InvalidArgument);
}

TEST(Ols, RankDeficientRejected) {
  Matrix x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(ols_fit(x, Vector::Ones(4)), InvalidArgument);
}

TEST(PolyRidge, RecoversCubicExactlyWithTinyPenalty) {
  Matrix x(30, 1);
  for (int i = 0; i < 30; ++i) x(i, 0) = -1 + 2.0 * i / 29;
  const Vector y = (1 + 2 * x.col(0).array() - x.col(0).array().cube()).matrix();
  const auto f = poly_ridge_fit(x, y, Vector::Ones(30), 3, 0.0);
  EXPECT_NEAR(f.intercept, 1.0, 1e-10);
  EXPECT_NEAR(f.coef(0), 2.0, 1e-10);
  EXPECT_NEAR(f.coef(1), 0.0, 1e-10);
  EXPECT_NEAR(f.coef(2), -1.0, 1e-10);
}
