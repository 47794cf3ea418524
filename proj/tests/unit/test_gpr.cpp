#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "workbench/error.hpp"
#include "workbench/gpr.hpp"
#include "workbench/synthgen.hpp"

using namespace workbench;

TEST(Gpr, SinglePointPosteriorClosedForm) {
  Matrix x(1, 2);
  x << 0.3, -0.7;
  Vector y(1);
  y << 1.7;
  for (double noise : {0.05, 0.2}) {
    const auto m = GprModel::with_hyperparameters(Dataset(x, y), KernelFamily::ConstRBF, Vector::Zero(2), noise);
    const auto pd = m.predict(x);
    EXPECT_NEAR(pd.mean(0), 1.7 / (1 + noise), 1e-12);
    EXPECT_NEAR(pd.sd(0), std::sqrt(1 - 1 / (1 + noise)), 1e-12);
  }
}

TEST(Gpr, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector y = wbtest::random_normal_vector(10, seed + 100);
    auto rng = make_rng(seed);
    for (auto f : kAllKernelFamilies) {
      // The periodic kernel is only positive definite on 1D inputs.
      const Matrix x = wbtest::random_normal_matrix(10, f == KernelFamily::ConstExpSine ? 1 : 2, seed);
      Vector lp(kernel_param_count(f));
      for (Eigen::Index k = 0; k < lp.size(); ++k) lp(k) = uniform(rng, -0.5, 0.5);
      Vector g;
      gpr_log_marginal_likelihood(f, lp, 0.1, x, y, &g);
      for (Eigen::Index k = 0; k < lp.size(); ++k) {
        const double h = 1e-5;
        Vector a = lp, b = lp;
        a(k) += h;
        b(k) -= h;
        const double fd = (gpr_log_marginal_likelihood(f, a, 0.1, x, y) -
                           gpr_log_marginal_likelihood(f, b, 0.1, x, y)) / (2 * h);
        EXPECT_LE(std::abs(fd - g(k)), 1e-4 * std::max(1.0, std::abs(g(k))))
            << to_string(f) << " param " << k;
      }
    }
  }
}

TEST(Gpr, SingletonNoiseGridIsChosen) {
  const auto probe = gen_function_probe(ProbeKind::Quad1D, 15, 3);
  const auto m = fit_gpr(probe.train, {0.05}, 1);
  EXPECT_EQ(m.noise(), 0.05);
}

TEST(Gpr, ReturnedModelDominatesCandidates) {
  const auto probe = gen_function_probe(ProbeKind::Step1D, 20, 4);
  const auto m = fit_gpr(probe.train, kDefaultNoiseGrid, 7);
  EXPECT_EQ(m.candidates().size(), 20u);
  for (const auto& c : m.candidates()) EXPECT_GE(m.log_marginal_likelihood(), c.lml - 1e-9);
  const auto again = fit_gpr(probe.train, kDefaultNoiseGrid, 7);
  EXPECT_EQ(again.log_params(), m.log_params());
}

TEST(Gpr, FarFieldRevertsToPriorMean) {
  const auto probe = gen_function_probe(ProbeKind::Linear1D, 31, 5);
  const auto m = fit_gpr(probe.train, kDefaultNoiseGrid, 5,
                         {KernelFamily::ConstRBF, KernelFamily::ConstMatern, KernelFamily::ConstRatQuad,
                          KernelFamily::ConstRBFPlusConstMatern});
  Matrix far(1, 1);
  far << 1e4;
  EXPECT_LT(std::abs(m.predict(far).mean(0)), 1e-3);
}

TEST(Gpr, PredictiveQuantilesAreGaussian) {
  const auto probe = gen_function_probe(ProbeKind::Quad1D, 12, 2);
  const auto m = fit_gpr(probe.train, {0.1}, 2, {KernelFamily::ConstRBF});
  const auto pd = m.predict(probe.eval_grid.x);
  EXPECT_NO_THROW(pd.validate());
  for (Eigen::Index i = 0; i < 5; ++i)
    EXPECT_NEAR(pd.quantiles(i, 4), pd.mean(i) + 1.959963984540054 * pd.sd(i), 1e-9);
}

TEST(Gpr, Preconditions) {
  EXPECT_THROW(fit_gpr(Dataset(Matrix::Zero(1, 1), Vector::Zero(1)), {0.1}, 0), InvalidArgument);
  EXPECT_THROW(fit_gpr(Dataset(Matrix::Zero(3, 1), Vector::Zero(3)), {}, 0), InvalidArgument);
  EXPECT_EQ(parse_kernel_family("rbf"), KernelFamily::ConstRBF);
  EXPECT_THROW(parse_kernel_family("poly"), InvalidArgument);
}
