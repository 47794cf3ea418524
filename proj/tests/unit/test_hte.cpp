#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracle_base.hpp"
#include "test_util.hpp"
#include "workbench/error.hpp"
#include "workbench/gbrt.hpp"
#include "workbench/hte.hpp"
#include "workbench/linear.hpp"

using namespace workbench;

namespace {

FixedFunctionPredictor constant(double c) {
  return FixedFunctionPredictor("const", [c](const Vector&) { return c; });
}

double max_tau_error(const CateEstimate& est, const Matrix& x, const CateOracle& o) {
  const Vector pred = est(x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) worst = std::max(worst, std::abs(pred(i) - o.effect(x.row(i).transpose())));
  return worst;
}

}  // namespace

TEST(Hte, LearnerNames) {
  for (auto l : {CateLearner::S, CateLearner::T, CateLearner::X, CateLearner::R, CateLearner::DR, CateLearner::OracleR})
    EXPECT_EQ(parse_cate_learner(to_string(l)), l);
  EXPECT_THROW(parse_cate_learner("Q"), InvalidArgument);
}

TEST(Hte, OracleBaseRecoversTauOnEverySetup) {
  for (auto setup : {CateSetup::A, CateSetup::B, CateSetup::C, CateSetup::D, CateSetup::E, CateSetup::F}) {
    const auto d = gen_cate(setup, 300, 0.0, 11);
    const Matrix test = gen_cate_features(200, 12);
    const auto base = wbtest::causal_oracle_base(d.oracle);
    const auto e = wbtest::oracle_propensity(d.oracle);
    EXPECT_LT(max_tau_error(s_learner(base, d), test, d.oracle), 1e-9) << to_string(setup);
    EXPECT_LT(max_tau_error(t_learner(base, d), test, d.oracle), 1e-9) << to_string(setup);
    EXPECT_LT(max_tau_error(x_learner(base, e, d), test, d.oracle), 1e-9) << to_string(setup);
    EXPECT_LT(max_tau_error(dr_learner(base, e, d), test, d.oracle), 1e-9) << to_string(setup);
  }
}

TEST(Hte, SetupCConstantEffect) {
  const auto d = gen_cate(CateSetup::C, 500, 0.0, 3);
  const Matrix test = gen_cate_features(100, 4);
  const auto est = s_learner(wbtest::causal_oracle_base(d.oracle), d);
  EXPECT_EQ(est(test), Vector::Ones(100));
  // tau_hat == 0 on Setup C scores exactly 1.
  CateEstimate zero;
  zero.tau_hat = [](const Matrix& q) { return Vector(Vector::Zero(q.rows())); };
  EXPECT_DOUBLE_EQ(evaluate_cate(zero, test, d.oracle), 1.0);
  CateEstimate shifted;
  shifted.tau_hat = [o = d.oracle](const Matrix& q) {
    Vector v(q.rows());
    for (Eigen::Index i = 0; i < q.rows(); ++i) v(i) = o.effect(q.row(i).transpose()) + 1.0;
    return v;
  };
  EXPECT_DOUBLE_EQ(evaluate_cate(shifted, test, d.oracle), 1.0);
}

TEST(Hte, SLearnerIgnoringTreatmentGivesZero) {
  const auto d = gen_cate(CateSetup::A, 100, 1.0, 5);
  // The design is [T, X]; a base that reads only X cannot produce an effect.
  const FixedFunctionPredictor blind("blind", [](const Vector& r) { return r.tail(6).sum(); });
  const auto est = s_learner(blind, d);
  EXPECT_EQ(est(d.x), Vector::Zero(100));
  EXPECT_EQ(est.components.count("mu"), 1u);
}

TEST(Hte, TLearnerArmMeans) {
  auto d = gen_cate(CateSetup::B, 200, 0.0, 6);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) d.outcome(i) = d.treatment(i) == 1.0 ? 3.0 : -0.5;
  const auto est = t_learner(wbtest::MeanBase(), d);
  EXPECT_EQ(est(d.x), Vector::Constant(200, 3.5));

  // Identical arms.
  CausalDataset twin;
  twin.x.resize(8, 6);
  twin.x.topRows(4) = wbtest::random_normal_matrix(4, 6, 1);
  twin.x.bottomRows(4) = twin.x.topRows(4);
  twin.treatment.resize(8);
  twin.treatment << 0, 0, 0, 0, 1, 1, 1, 1;
  twin.outcome.resize(8);
  twin.outcome.head(4) = wbtest::random_normal_vector(4, 2);
  twin.outcome.tail(4) = twin.outcome.head(4);
  EXPECT_EQ(t_learner(PolyRidge(1, 1e-3), twin)(twin.x), Vector::Zero(8));
}

TEST(Hte, SingleArmRejected) {
  auto d = gen_cate(CateSetup::B, 50, 1.0, 7);
  d.treatment.setZero();
  EXPECT_THROW(s_learner(wbtest::MeanBase(), d), InvalidArgument);
  EXPECT_THROW(t_learner(wbtest::MeanBase(), d), InvalidArgument);
  EXPECT_THROW(x_learner(wbtest::MeanBase(), constant(0.5), d), InvalidArgument);
  EXPECT_THROW(dr_learner(wbtest::MeanBase(), constant(0.5), d), InvalidArgument);
}

TEST(Hte, XLearnerCombination) {
  // tau0 = 1 and tau1 = 2 via constant arms; e = 0.3.
  CausalDataset d;
  d.x = wbtest::random_normal_matrix(6, 6, 3);
  d.treatment.resize(6);
  d.treatment << 0, 0, 0, 1, 1, 1;
  d.outcome.resize(6);
  d.outcome << 0, 0, 0, 2, 2, 2;
  // mu0 = 0, mu1 = 2 from the mean base, so D1 = 2 and D0 = 2; override through a scripted base.
  const FixedFunctionPredictor e("e", [](const Vector&) { return 0.3; });
  class Scripted final : public Predictor {
   public:
    FittedPtr fit(const Dataset& train) const override {
      ++calls_;
      const double v = calls_ == 3 ? 2.0 : calls_ == 4 ? 1.0 : train.labels().mean();  // tau1 then tau0
      return std::make_shared<FunctionModel>([v](const Vector&) { return v; });
    }
    std::string name() const override { return "scripted"; }
    mutable int calls_ = 0;
  } base;
  EXPECT_NEAR(x_learner(base, e, d)(d.x)(0), 0.3 * 1 + 0.7 * 2, 1e-15);

  // e == 1 collapses to tau0, e == 0 to tau1; both equal the T-learner with exact arms.
  const auto c = gen_cate(CateSetup::D, 200, 0.0, 8);
  const auto ob = wbtest::causal_oracle_base(c.oracle);
  const Vector t_pred = t_learner(ob, c)(c.x);
  EXPECT_LT(wbtest::max_abs_diff(x_learner(ob, constant(1.0), c)(c.x), t_pred), 1e-12);
  EXPECT_LT(wbtest::max_abs_diff(x_learner(ob, constant(0.0), c)(c.x), t_pred), 1e-12);
}

TEST(Hte, DrPseudoOutcomeArithmetic) {
  Vector y(2), t(2), mu0 = Vector::Zero(2), mu1 = Vector::Zero(2), e = Vector::Constant(2, 0.5);
  y << 2, 0.7;
  t << 1, 0;
  mu0(1) = 0.7;
  mu1(1) = 1.9;
  const Vector p = dr_pseudo_outcome(y, t, mu0, mu1, e, 0.01);
  EXPECT_EQ(p(0), 4.0);
  EXPECT_DOUBLE_EQ(p(1), 1.9 - 0.7);
  EXPECT_THROW(dr_pseudo_outcome(y, t, mu0, mu1, e, 0.5), InvalidArgument);
  EXPECT_THROW(dr_pseudo_outcome(y, t, mu0, mu1, e, 0.0), InvalidArgument);
  // Clipping bounds the weight.
  e(0) = 1e-9;
  EXPECT_DOUBLE_EQ(dr_pseudo_outcome(y, t, mu0, mu1, e, 0.01)(0), 200.0);
}

TEST(Hte, DrPseudoOutcomeExactWithTrueNuisances) {
  const auto d = gen_cate(CateSetup::E, 400, 0.0, 9);
  const auto est = dr_learner(wbtest::causal_oracle_base(d.oracle), wbtest::oracle_propensity(d.oracle), d);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    EXPECT_NEAR(est.pseudo_outcome(i), d.oracle.effect(d.x.row(i).transpose()), 1e-12);
}

TEST(Hte, RLearnerResidualArithmetic) {
  CausalDataset d;
  d.x = Matrix::Zero(2, 1);
  d.treatment.resize(2);
  d.treatment << 1, 0;
  d.outcome.resize(2);
  d.outcome << 1, 0;
  const auto est = r_learner(PolyRidge(1, 0.0), constant(0.0), constant(0.5), d);
  EXPECT_EQ(est.pseudo_outcome(0), 2.0);
  EXPECT_EQ(est.weights(0), 0.25);
}

TEST(Hte, RLearnerUniformWeightsIsOls) {
  // Setup B: e == 0.5 so T~ = +-0.5 and the weighted fit is OLS of 2 Y~ on X.
  const auto d = gen_cate(CateSetup::B, 300, 1.0, 10);
  const auto est = oracle_r_learner(PolyRidge(1, 0.0), d);
  EXPECT_EQ(est.weights, Vector::Constant(300, 0.25));
  EXPECT_EQ(est.dropped_rows, 0u);
  Vector y_res(300);
  for (Eigen::Index i = 0; i < 300; ++i) y_res(i) = d.outcome(i) - d.oracle.marginal_mean(d.x.row(i).transpose());
  const Vector target = (y_res.array() / (d.treatment.array() - 0.5)).matrix();
  const auto ols = ols_fit(d.x, target);
  EXPECT_LT(wbtest::max_abs_diff(est(d.x), ols.predict(d.x)), 1e-9);
}

TEST(Hte, OracleRRecoversConstantEffect) {
  const auto d = gen_cate(CateSetup::C, 500, 0.0, 13);
  const auto est = oracle_r_learner(PolyRidge(), d);
  const Matrix test = gen_cate_features(200, 14);
  EXPECT_LT((est(test).array() - 1.0).abs().maxCoeff(), 1e-6);
  EXPECT_LT(evaluate_cate(est, test, d.oracle), 1e-6);
}

TEST(Hte, RLearnerObjectiveDominance) {
  const auto d = gen_cate(CateSetup::A, 400, 0.5, 15);
  const auto est = oracle_r_learner(PolyRidge(1, 0.0), d);
  const Vector w = est.weights;
  const Vector t_res = w.cwiseSqrt();  // sign cancels in the objective once folded into y~
  const Vector y_res = est.pseudo_outcome.cwiseProduct(t_res);
  const Matrix x_kept = d.x;  // nothing dropped on Setup A
  ASSERT_EQ(est.dropped_rows, 0u);
  const double fitted = r_objective(y_res, t_res, est(x_kept));
  const double zero = r_objective(y_res, t_res, Vector::Zero(400));
  const double c = y_res.dot(t_res) / t_res.squaredNorm();
  EXPECT_LE(fitted, zero);
  EXPECT_LE(fitted, r_objective(y_res, t_res, Vector::Constant(400, c)));
}

TEST(Hte, DegenerateRResidualsRejected) {
  auto d = gen_cate(CateSetup::B, 20, 1.0, 16);
  d.treatment.setConstant(1.0);
  d.treatment(0) = 0.0;
  const FixedFunctionPredictor e("e", [](const Vector&) { return 1.0; });
  // Clip keeps e at 0.99 so residuals are 0.01, not degenerate.
  EXPECT_NO_THROW(r_learner(PolyRidge(1, 1e-3), constant(0.0), e, d));
  CausalDataset single = d;
  single.x = d.x.topRows(1);
  single.treatment = Vector::Constant(1, 0.5);
  single.outcome = d.outcome.head(1);
  EXPECT_THROW(r_learner(PolyRidge(1, 1e-3), constant(0.0), constant(0.5), single), InvalidArgument);
}

TEST(Hte, DrUnbiasedWithTrueNuisancesSetupA) {
  const auto d = gen_cate(CateSetup::A, 100000, 1.0, 17);
  Vector mu0(d.x.rows()), mu1(d.x.rows()), e(d.x.rows()), tau(d.x.rows());
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const Vector r = d.x.row(i).transpose();
    mu0(i) = d.oracle.mu0(r);
    mu1(i) = d.oracle.mu1(r);
    e(i) = d.oracle.propensity(r);
    tau(i) = d.oracle.effect(r);
  }
  const Vector diff = dr_pseudo_outcome(d.outcome, d.treatment, mu0, mu1, e, 0.01) - tau;
  const double mean = diff.mean();
  const double se = std::sqrt((diff.array() - mean).square().sum() / (diff.size() - 1.0) / diff.size());
  EXPECT_LT(std::abs(mean), 4 * se);
}

TEST(Hte, CsvExport) {
  const auto d = gen_cate(CateSetup::C, 50, 0.0, 18);
  const auto est = t_learner(wbtest::causal_oracle_base(d.oracle), d);
  std::ostringstream out;
  write_cate_csv(out, est, d.x.topRows(2), d.oracle);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "x1,x2,x3,x4,x5,x6,tau_hat,tau_true");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
  EXPECT_NE(s.find(",1,1\n"), std::string::npos);
}

TEST(Hte, GbrtBaseRuns) {
  const auto d = gen_cate(CateSetup::B, 200, 0.25, 19);
  const GbrtRegressor gb(1, GbrtGrid{{50}, {2}, {0.1}}, 3);
  const auto est = r_learner(gb, gb, wbtest::oracle_propensity(d.oracle), d);
  EXPECT_TRUE(est(d.x).allFinite());
  EXPECT_EQ(est.components.size(), 3u);
}
