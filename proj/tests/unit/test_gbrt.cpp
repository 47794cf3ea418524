#include <gtest/gtest.h>

#include "test_util.hpp"
#include "workbench/error.hpp"
#include "workbench/gbrt.hpp"
#include "workbench/synthgen.hpp"

using namespace workbench;

TEST(Gbrt, ConstantTarget) {
  const Matrix x = wbtest::random_normal_matrix(40, 2, 1);
  const auto m = fit_gbrt_fixed(Dataset(x, Vector::Constant(40, 3.25)), std::nullopt, {50, 3, 0.1});
  const Vector p = m.predict(wbtest::random_normal_matrix(10, 2, 2)).mean;
  EXPECT_EQ(p, Vector::Constant(10, 3.25));
}

TEST(Gbrt, EqualWeightsMatchUnweighted) {
  const auto b = gen_covshift(MeanFn::F2, 120, 10, 10, 3);
  const auto a = fit_gbrt_fixed(b.source, std::nullopt, {60, 3, 0.1});
  const auto w = fit_gbrt_fixed(b.source, Vector::Constant(120, 2.5), {60, 3, 0.1});
  EXPECT_LT(wbtest::max_abs_diff(a.predict(b.target_test.x).mean, w.predict(b.target_test.x).mean), 1e-12);
}

TEST(Gbrt, StumpRecoversStep) {
  Matrix x(10, 1);
  Vector y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = -1 + 0.2 * i + 0.05;
    y(i) = x(i, 0) > 0 ? 2.0 : -1.0;
  }
  const auto m = fit_gbrt_fixed(Dataset(x, y), std::nullopt, {1, 1, 1.0});
  EXPECT_EQ(m.predict(x).mean, y);
  EXPECT_NEAR(m.trees[0].nodes[0].threshold, -0.05, 1e-12);  // midpoint of -0.15 and 0.05
}

TEST(Gbrt, IntegerWeightsEqualReplication) {
  const auto b = gen_covshift(MeanFn::F5, 60, 10, 10, 4);
  Vector w(60);
  std::vector<std::size_t> rows;
  auto rng = make_rng(9);
  for (Eigen::Index i = 0; i < 60; ++i) {
    w(i) = 1 + static_cast<double>(uniform_index(rng, 3));
    for (int r = 0; r < w(i); ++r) rows.push_back(static_cast<std::size_t>(i));
  }
  const auto weighted = fit_gbrt_fixed(b.source, w, {40, 3, 0.1});
  const auto replicated = fit_gbrt_fixed(b.source.subset(rows), std::nullopt, {40, 3, 0.1});
  EXPECT_LT(wbtest::max_abs_diff(weighted.predict(b.target_test.x).mean, replicated.predict(b.target_test.x).mean),
            1e-12);
}

TEST(Gbrt, CvSelectsFromGrid) {
  const auto b = gen_covshift(MeanFn::F1, 150, 10, 10, 5);
  const auto m = fit_gbrt(b.source, std::nullopt, GbrtGrid{}, 5, 1);
  EXPECT_EQ(m.grid.size(), 8u);
  EXPECT_EQ(m.cv_mse.size(), 8u);
  const auto best = std::min_element(m.cv_mse.begin(), m.cv_mse.end()) - m.cv_mse.begin();
  EXPECT_EQ(m.params.trees, m.grid[static_cast<std::size_t>(best)].trees);
  EXPECT_EQ(m.trees.size(), m.params.trees);
}

TEST(Gbrt, NonPositiveWeightRejected) {
  const auto b = gen_covshift(MeanFn::F1, 20, 10, 10, 5);
  Vector w = Vector::Ones(20);
  w(3) = 0.0;
  EXPECT_THROW(fit_gbrt_fixed(b.source, w, {}), InvalidArgument);
}
