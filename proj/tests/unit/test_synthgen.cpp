#include <gtest/gtest.h>

#include <cmath>

#include "workbench/error.hpp"
#include "workbench/synthgen.hpp"

using namespace workbench;

namespace {

Vector v6(double a, double b, double c, double d, double e, double f) {
  Vector x(6);
  x << a, b, c, d, e, f;
  return x;
}

}  // namespace

TEST(Semisup, QuantileScaleVector) {
  Vector a = quantile_alpha3(4);
  EXPECT_EQ(a(0), 0.5);
  EXPECT_EQ(a(1), 0.5);
  EXPECT_EQ(a(2), 0.0);
  EXPECT_EQ(a(3), 0.0);
  EXPECT_EQ(quantile_alpha3(5).sum(), 1.5);
}

TEST(Semisup, LinearMeanAtZeroIsTwo) { EXPECT_DOUBLE_EQ(semisup_linear_mean(Vector::Zero(1)), 2.0); }

TEST(Semisup, LogisticInterceptIsEleven) {
  EXPECT_EQ(kLogisticIntercept, 11.0);
  const double p = semisup_logistic_prob(Vector::Zero(2));
  EXPECT_NEAR(std::log(p / (1 - p)), 11.0, 1e-9);
}

TEST(Semisup, ShapesAndDeterminism) {
  const auto a = gen_semisup(SemiSupSetting::Quantile, 3, 40, 60, 7);
  const auto b = gen_semisup(SemiSupSetting::Quantile, 3, 40, 60, 7);
  EXPECT_EQ(a.labeled.rows(), 40u);
  EXPECT_EQ(a.unlabeled.rows(), 60u);
  EXPECT_FALSE(a.unlabeled.labeled());
  EXPECT_EQ(a.labeled.x, b.labeled.x);
  EXPECT_EQ(*a.labeled.y, *b.labeled.y);
  EXPECT_EQ(a.unlabeled.x, b.unlabeled.x);
  const auto c = gen_semisup(SemiSupSetting::Quantile, 3, 40, 60, 8);
  EXPECT_NE(a.labeled.x, c.labeled.x);
  EXPECT_THROW(gen_semisup(SemiSupSetting::Linear, 0, 10, 10, 1), InvalidArgument);
  EXPECT_THROW(parse_semisup_setting("cubic"), InvalidArgument);
}

TEST(Semisup, LinearNoiseVarianceIsFour) {
  const auto d = gen_semisup(SemiSupSetting::Linear, 2, 100000, 1, 11);
  double s = 0, s2 = 0;
  for (Eigen::Index i = 0; i < d.labeled.x.rows(); ++i) {
    const double e = (*d.labeled.y)(i) - semisup_linear_mean(d.labeled.x.row(i).transpose());
    s += e;
    s2 += e * e;
  }
  const double n = 1e5;
  const double var = s2 / n - (s / n) * (s / n);
  // sd of the sample variance of N(0, 4) is about 4 sqrt(2/n).
  EXPECT_NEAR(var, 4.0, 4 * 4.0 * std::sqrt(2.0 / n));
}

TEST(Cate, OracleIdentitiesAreExact) {
  auto rng = make_rng(3);
  for (auto setup : {CateSetup::A, CateSetup::B, CateSetup::C, CateSetup::D, CateSetup::E, CateSetup::F}) {
    const CateOracle o{setup};
    for (int i = 0; i < 10000; ++i) {
      Vector x(6);
      for (int j = 0; j < 6; ++j) x(j) = uniform(rng, -0.5, 0.5);
      ASSERT_EQ(o.mu1(x) - o.mu0(x), o.effect(x));
      ASSERT_EQ(0.5 * (o.mu0(x) + o.mu1(x)), o.base(x));
      const double e = o.propensity(x);
      ASSERT_GT(e, 0.0);
      ASSERT_LT(e, 1.0);
    }
  }
}

TEST(Cate, SetupExamples) {
  const Vector x = v6(0, 0, 0.5, 0, 0, 0);
  EXPECT_EQ(CateOracle{CateSetup::B}.propensity(x), 0.5);
  EXPECT_EQ(CateOracle{CateSetup::C}.effect(x), 1.0);
  EXPECT_NEAR(CateOracle{CateSetup::A}.base(x), 0.0, 1e-12);
  EXPECT_NEAR(CateOracle{CateSetup::A}.effect(x), 0.2, 1e-12);
}

TEST(Cate, NoiselessOutcomesMatchResponses) {
  const auto d = gen_cate(CateSetup::D, 200, 0.0, 5);
  ASSERT_EQ(d.x.cols(), 6);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const Vector x = d.x.row(i).transpose();
    EXPECT_EQ(d.outcome(i), d.oracle.mu(static_cast<int>(d.treatment(i)), x));
    EXPECT_TRUE(d.treatment(i) == 0.0 || d.treatment(i) == 1.0);
    EXPECT_LE(x.cwiseAbs().maxCoeff(), 0.5);
  }
  EXPECT_THROW(parse_cate_setup("G"), InvalidArgument);
}

TEST(CovShift, DensityRatioAndMeans) {
  EXPECT_EQ(covshift_density_ratio(0.75), 5.0);
  EXPECT_EQ(covshift_density_ratio(0.25), 0.2);
  EXPECT_NEAR(covshift_mean(MeanFn::F1, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(covshift_mean(MeanFn::F4, 0.5), -1.0, 1e-12);
  EXPECT_EQ(parse_mean_fn("iv"), MeanFn::F4);
  EXPECT_EQ(parse_mean_fn("F2"), MeanFn::F2);
  EXPECT_THROW(parse_mean_fn("vi"), InvalidArgument);
}

TEST(CovShift, SourceMassOnLowerHalf) {
  const auto b = gen_covshift(MeanFn::F2, 100000, 10, 10, 9);
  const double frac = (b.source.x.col(0).array() < 0.5).cast<double>().mean();
  const double se = std::sqrt(5.0 / 36.0 / 1e5);
  EXPECT_NEAR(frac, 5.0 / 6.0, 4 * se);
  EXPECT_GT(b.source.x.minCoeff(), 0.0);
  EXPECT_LT(b.source.x.maxCoeff(), 1.0);
  EXPECT_FALSE(b.target_aux.labeled());
}

TEST(LabelNoise, EtaExamplesAndFlipRate) {
  Vector x(5);
  x << 0.5, 0.5, 0.1, 0.2, 0.3;
  EXPECT_EQ(noise_eta(NoiseModel::M2, x), 0.0);
  x << 0, 0, 0, 0, 0;
  EXPECT_EQ(noise_eta(NoiseModel::M2, x), 1.0);
  const auto clean = gen_labelnoise(NoiseModel::M1, 500, 0.0, 10, 1);
  EXPECT_EQ(*clean.train.y, clean.train_clean_labels);
  const auto b = gen_labelnoise(NoiseModel::M2, 100000, 0.2, 10, 2);
  const double flips = (b.train.y->array() != b.train_clean_labels.array()).cast<double>().mean();
  EXPECT_NEAR(flips, 0.2, 4 * std::sqrt(0.16 / 1e5));
  EXPECT_THROW(gen_labelnoise(NoiseModel::M1, 10, 0.5, 10, 1), InvalidArgument);
}

TEST(LabelNoise, M1DiscriminantAtClassMean) {
  EXPECT_NEAR(m1_discriminant(Vector::Zero(5)), std::log(9.0), 1e-12);
  EXPECT_NEAR(m1_discriminant(m1_class_mean(1)), std::log(9.0) + 4.5, 1e-12);
}

TEST(SparseLinear, NoiseVarianceFromSnr) {
  const auto d = gen_sparse_linear(20, 5, BetaType::I, CovType::Identity, 1.22, 50, 10, 1);
  EXPECT_NEAR(d.sigma2, 5.0 / 1.22, 1e-12);
  EXPECT_EQ(d.beta_star.sum(), 5.0);
  EXPECT_NEAR(design_covariance(5, CovType::Banded)(0, 2), 0.1225, 1e-15);
  EXPECT_THROW(gen_sparse_linear(3, 4, BetaType::I, CovType::Identity, 1, 10, 10, 1), InvalidArgument);
}

TEST(SparseLinear, SupportRules) {
  const auto ii = beta_support(100, 10, BetaType::II);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(ii[k], k);
  const auto i = beta_support(10, 10, BetaType::I);
  EXPECT_EQ(i.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(i[k], k);
  const auto spread = beta_support(100, 5, BetaType::I);
  EXPECT_EQ(spread.size(), 5u);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_GT(spread[k], spread[k - 1]);
}

TEST(SparseLinear, EmpiricalCovarianceMatchesBanded) {
  const auto d = gen_sparse_linear(6, 2, BetaType::II, CovType::Banded, 2.0, 100000, 10, 4);
  const Matrix c = d.train.x.transpose() * d.train.x / 1e5;
  EXPECT_LT((c - d.sigma).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Probes, Examples) {
  const auto step = gen_function_probe(ProbeKind::Step1D, 10, 1);
  EXPECT_EQ(step.truth(Vector::Zero(1)), 1.0);
  const auto quad = gen_function_probe(ProbeKind::Quad2D, 4, 1);
  EXPECT_EQ(quad.truth(Vector::Ones(2)), 2.0);
  EXPECT_EQ(quad.train.rows(), 16u);
  EXPECT_EQ(quad.eval_grid.rows(), kProbeGrid2D * kProbeGrid2D);
  const auto one = gen_function_probe(ProbeKind::Linear1D, 31, 2);
  EXPECT_EQ(one.eval_grid.rows(), kProbeGrid1D);
  EXPECT_EQ(one.eval_grid.x.minCoeff(), -4.0);
  EXPECT_EQ(one.eval_grid.x.maxCoeff(), 4.0);
  EXPECT_LE(one.train.x.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Probes, ConstantBilinearSurface) {
  Eigen::Matrix<double, 5, 5> c;
  c.setConstant(0.3);
  const auto f = bilinear_surface(c);
  auto rng = make_rng(1);
  for (int i = 0; i < 100; ++i) {
    Vector x(2);
    x << uniform(rng, -1, 1), uniform(rng, -1, 1);
    EXPECT_NEAR(f(x), 0.3, 1e-15);
  }
}

TEST(Probes, BilinearInterpolatesCorners) {
  Eigen::Matrix<double, 5, 5> c;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) c(i, j) = i * 10 + j;
  const auto f = bilinear_surface(c);
  Vector x(2);
  x << -1 + 0.5 * 3, -1 + 0.5 * 2;
  EXPECT_NEAR(f(x), 32.0, 1e-12);
  x << -0.75, -1.0;  // halfway between corners (0,0) and (1,0)
  EXPECT_NEAR(f(x), 5.0, 1e-12);
}

TEST(Probes, PiecewiseLinearIsContinuous) {
  const auto f = piecewise_linear_1d(0.5, {1.0, -2.0, 0.5, 2.0});
  auto at = [&](double t) { return f(Vector::Constant(1, t)); };
  EXPECT_NEAR(at(-1.0), 0.5, 1e-15);
  EXPECT_NEAR(at(-0.5), 1.0, 1e-15);
  EXPECT_NEAR(at(0.0), 0.0, 1e-15);
  EXPECT_NEAR(at(0.5), 0.25, 1e-15);
  EXPECT_NEAR(at(1.0), 1.25, 1e-15);
  for (double k : {-0.5, 0.0, 0.5}) EXPECT_NEAR(at(k - 1e-9), at(k + 1e-9), 1e-8);
}
