#include <gtest/gtest.h>

#include <sstream>

#include "workbench/dataset.hpp"
#include "workbench/error.hpp"
#include "workbench/predictor.hpp"
#include "workbench/wire.hpp"

using namespace workbench;

TEST(Dataset, ValidateRejectsNonFinite) {
  Matrix x(2, 1);
  x << 1.0, std::nan("");
  EXPECT_THROW(Dataset(x).validate(), InvalidArgument);
}

TEST(Dataset, ValidateRejectsLabelMismatch) {
  EXPECT_THROW(Dataset(Matrix::Ones(3, 2), Vector::Ones(2)).validate(), InvalidArgument);
}

TEST(Dataset, LabelsThrowWhenAbsent) { EXPECT_THROW(Dataset(Matrix::Ones(2, 2)).labels(), InvalidArgument); }

TEST(Dataset, CsvRoundTripIsExact) {
  Matrix x(2, 2);
  x << 0.1, -1e-300, 1.0 / 3.0, 12345.678901234567;
  Vector y(2);
  y << std::sqrt(2.0), -0.0;
  std::stringstream ss;
  write_csv(ss, Dataset(x, y));
  EXPECT_EQ(ss.str().substr(0, 9), "x1,x2,y\n0");
  const Dataset back = read_csv(ss);
  EXPECT_EQ(back.x, x);
  EXPECT_EQ(*back.y, y);
}

TEST(Dataset, CsvRejectsBadHeader) {
  std::stringstream ss("a,b\n1,2\n");
  EXPECT_THROW(read_csv(ss), InvalidArgument);
}

TEST(Dataset, SubsetAndConcat) {
  Matrix x(3, 1);
  x << 1, 2, 3;
  const Dataset d(x, Vector(x.col(0)));
  const Dataset s = d.subset({2, 0});
  EXPECT_EQ(s.x(0, 0), 3);
  EXPECT_EQ((*s.y)(1), 1);
  const Dataset c = concat(d, s);
  EXPECT_EQ(c.rows(), 5u);
  EXPECT_TRUE(c.labeled());
  EXPECT_FALSE(concat(d, d.unlabeled()).labeled());
}

TEST(Dataset, JsonRoundTrip) {
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6.5;
  Vector y(2);
  y << 0.25, -1;
  const Dataset back = dataset_from_json(dataset_to_json(Dataset(x, y)));
  EXPECT_EQ(back.x, x);
  EXPECT_EQ(*back.y, y);
  EXPECT_FALSE(dataset_from_json(dataset_to_json(Dataset(x))).labeled());
}

TEST(PredictiveDistribution, PointFillsQuantilesWithMean) {
  Vector m(2);
  m << 1.5, -2;
  const auto pd = PredictiveDistribution::point(m);
  EXPECT_NO_THROW(pd.validate());
  EXPECT_EQ(pd.sd, Vector::Zero(2));
  for (Eigen::Index q = 0; q < pd.quantiles.cols(); ++q) EXPECT_EQ(pd.quantiles.col(q), m);
}

TEST(PredictiveDistribution, GaussianQuantilesAreOrdered) {
  const auto pd = PredictiveDistribution::gaussian(Vector::Zero(1), Vector::Ones(1));
  EXPECT_NEAR(pd.quantiles(0, 0), -1.959963984540054, 1e-12);
  EXPECT_NEAR(pd.quantiles(0, 4), 1.959963984540054, 1e-12);
  EXPECT_EQ(pd.quantiles(0, 2), 0.0);
}

TEST(PredictiveDistribution, ValidateRejectsDecreasingQuantiles) {
  auto pd = PredictiveDistribution::point(Vector::Zero(1));
  pd.quantiles(0, 0) = 1.0;
  EXPECT_THROW(pd.validate(), InvalidArgument);
  auto neg = PredictiveDistribution::point(Vector::Zero(1));
  neg.sd(0) = -1.0;
  EXPECT_THROW(neg.validate(), InvalidArgument);
}

TEST(NormalQuantile, MatchesKnownValues) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(normal_quantile(0.25), -0.6744897501960817, 1e-14);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-10);
}
