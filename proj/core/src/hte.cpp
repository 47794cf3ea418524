#include "workbench/hte.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "workbench/error.hpp"

namespace workbench {

namespace {

struct Arms {
  std::vector<std::size_t> control, treated;
};

Arms split_arms(const CausalDataset& d) {
  if (d.treatment.size() != d.x.rows() || d.outcome.size() != d.x.rows())
    throw InvalidArgument("causal data: length mismatch");
  Arms a;
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const double t = d.treatment(i);
    if (t == 1.0) a.treated.push_back(static_cast<std::size_t>(i));
    else if (t == 0.0) a.control.push_back(static_cast<std::size_t>(i));
    else throw InvalidArgument("causal data: treatment must be 0 or 1");
  }
  return a;
}

void require_arms(const Arms& a, std::size_t min_rows, const char* who) {
  if (a.control.size() < min_rows || a.treated.size() < min_rows)
    throw InvalidArgument(std::string(who) + ": each treatment arm needs at least " +
                          std::to_string(min_rows) + " row(s)");
}

Matrix rows_of(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Vector entries_of(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Matrix with_treatment(const Matrix& x, double t) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setConstant(t);
  d.rightCols(x.cols()) = x;
  return d;
}

Vector propensity_scores(const FittedPtr& e, const Matrix& x, double clip) {
  Vector p = e->predict_mean(x);
  if (!p.allFinite()) throw NumericalError("propensity model returned non-finite scores");
  return p.cwiseMax(clip).cwiseMin(1.0 - clip);
}

void check_clip(double clip) {
  if (!(clip > 0.0 && clip < 0.5)) throw InvalidArgument("propensity clip must lie in (0, 0.5)");
}

std::function<Vector(const Matrix&)> single(FittedPtr m) {
  return [m = std::move(m)](const Matrix& q) { return m->predict_mean(q); };
}

}  // namespace

std::string to_string(CateLearner l) {
  switch (l) {
    case CateLearner::S: return "S";
    case CateLearner::T: return "T";
    case CateLearner::X: return "X";
    case CateLearner::R: return "R";
    case CateLearner::DR: return "DR";
    case CateLearner::OracleR: return "OracleR";
  }
  return "?";
}

CateLearner parse_cate_learner(std::string_view s) {
  std::string u(s);
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (u == "S") return CateLearner::S;
  if (u == "T") return CateLearner::T;
  if (u == "X") return CateLearner::X;
  if (u == "R") return CateLearner::R;
  if (u == "DR") return CateLearner::DR;
  if (u == "ORACLER" || u == "ORACLE-R" || u == "ORACLE_R") return CateLearner::OracleR;
  throw InvalidArgument("unknown CATE learner: " + std::string(s));
}

CateEstimate s_learner(const Predictor& base, const CausalDataset& data) {
  require_arms(split_arms(data), 1, "s_learner");
  Matrix design(data.x.rows(), data.x.cols() + 1);
  design.col(0) = data.treatment;
  design.rightCols(data.x.cols()) = data.x;
  auto mu = base.fit(Dataset(design, data.outcome));
  CateEstimate est;
  est.learner = CateLearner::S;
  est.components["mu"] = mu;
  est.tau_hat = [mu](const Matrix& q) {
    return Vector(mu->predict_mean(with_treatment(q, 1.0)) - mu->predict_mean(with_treatment(q, 0.0)));
  };
  return est;
}

CateEstimate t_learner(const Predictor& base, const CausalDataset& data) {
  const auto arms = split_arms(data);
  require_arms(arms, 2, "t_learner");
  auto mu0 = base.fit(Dataset(rows_of(data.x, arms.control), entries_of(data.outcome, arms.control)));
  auto mu1 = base.fit(Dataset(rows_of(data.x, arms.treated), entries_of(data.outcome, arms.treated)));
  CateEstimate est;
  est.learner = CateLearner::T;
  est.components["mu0"] = mu0;
  est.components["mu1"] = mu1;
  est.tau_hat = [mu0, mu1](const Matrix& q) { return Vector(mu1->predict_mean(q) - mu0->predict_mean(q)); };
  return est;
}

CateEstimate x_learner(const Predictor& base, const Predictor& propensity, const CausalDataset& data) {
  const auto arms = split_arms(data);
  require_arms(arms, 1, "x_learner");
  const Matrix x0 = rows_of(data.x, arms.control), x1 = rows_of(data.x, arms.treated);
  const Vector y0 = entries_of(data.outcome, arms.control), y1 = entries_of(data.outcome, arms.treated);
  auto mu0 = base.fit(Dataset(x0, y0));
  auto mu1 = base.fit(Dataset(x1, y1));
  const Vector d1 = y1 - mu0->predict_mean(x1);
  const Vector d0 = mu1->predict_mean(x0) - y0;
  auto tau1 = base.fit(Dataset(x1, d1));
  auto tau0 = base.fit(Dataset(x0, d0));
  auto e = propensity.fit(Dataset(data.x, data.treatment));

  CateEstimate est;
  est.learner = CateLearner::X;
  est.components = {{"mu0", mu0}, {"mu1", mu1}, {"tau0", tau0}, {"tau1", tau1}, {"e", e}};
  est.tau_hat = [e, tau0, tau1](const Matrix& q) {
    const Vector g = propensity_scores(e, q, 0.0);
    return Vector(g.cwiseProduct(tau0->predict_mean(q)) +
                  (1.0 - g.array()).matrix().cwiseProduct(tau1->predict_mean(q)));
  };
  return est;
}

Vector dr_pseudo_outcome(const Vector& y, const Vector& t, const Vector& mu0, const Vector& mu1,
                         const Vector& e, double clip) {
  check_clip(clip);
  const auto n = y.size();
  if (t.size() != n || mu0.size() != n || mu1.size() != n || e.size() != n)
    throw InvalidArgument("dr_pseudo_outcome: length mismatch");
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = std::clamp(e(i), clip, 1.0 - clip);
    out(i) = t(i) * (y(i) - mu1(i)) / p - (1.0 - t(i)) * (y(i) - mu0(i)) / (1.0 - p) + mu1(i) - mu0(i);
  }
  return out;
}

CateEstimate dr_learner(const Predictor& base, const Predictor& propensity, const CausalDataset& data,
                        double clip) {
  check_clip(clip);
  const auto arms = split_arms(data);
  require_arms(arms, 1, "dr_learner");
  auto mu0 = base.fit(Dataset(rows_of(data.x, arms.control), entries_of(data.outcome, arms.control)));
  auto mu1 = base.fit(Dataset(rows_of(data.x, arms.treated), entries_of(data.outcome, arms.treated)));
  auto e = propensity.fit(Dataset(data.x, data.treatment));
  Vector pseudo = dr_pseudo_outcome(data.outcome, data.treatment, mu0->predict_mean(data.x),
                                    mu1->predict_mean(data.x), e->predict_mean(data.x), clip);
  auto tau = base.fit(Dataset(data.x, pseudo));

  CateEstimate est;
  est.learner = CateLearner::DR;
  est.components = {{"mu0", mu0}, {"mu1", mu1}, {"e", e}, {"tau", tau}};
  est.tau_hat = single(tau);
  est.pseudo_outcome = std::move(pseudo);
  return est;
}

CateEstimate r_learner(const WeightedRegressor& base, const Predictor& mhat, const Predictor& ehat,
                       const CausalDataset& data, double clip) {
  check_clip(clip);
  split_arms(data);
  auto m = mhat.fit(Dataset(data.x, data.outcome));
  auto e = ehat.fit(Dataset(data.x, data.treatment));
  const Vector y_res = data.outcome - m->predict_mean(data.x);
  const Vector t_res = data.treatment - propensity_scores(e, data.x, clip);

  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < t_res.size(); ++i)
    if (std::abs(t_res(i)) >= kMinTreatmentResidual) keep.push_back(static_cast<std::size_t>(i));
  if (keep.empty()) throw InvalidArgument("r_learner: every treatment residual is below 1e-6");

  const Vector tr = entries_of(t_res, keep);
  Vector target = entries_of(y_res, keep).cwiseQuotient(tr);
  Vector w = tr.cwiseAbs2();
  auto tau = base.fit_weighted(Dataset(rows_of(data.x, keep), target), w);

  CateEstimate est;
  est.learner = CateLearner::R;
  est.components = {{"m", m}, {"e", e}, {"tau", tau}};
  est.tau_hat = single(tau);
  est.pseudo_outcome = std::move(target);
  est.weights = std::move(w);
  est.dropped_rows = data.rows() - keep.size();
  return est;
}

CateEstimate oracle_r_learner(const WeightedRegressor& base, const CausalDataset& data, double clip) {
  const CateOracle o = data.oracle;
  const FixedFunctionPredictor m("oracle-m", [o](const Vector& x) { return o.marginal_mean(x); });
  const FixedFunctionPredictor e("oracle-e", [o](const Vector& x) { return o.propensity(x); });
  auto est = r_learner(base, m, e, data, clip);
  est.learner = CateLearner::OracleR;
  return est;
}

double r_objective(const Vector& y_resid, const Vector& t_resid, const Vector& tau) {
  if (y_resid.size() != t_resid.size() || tau.size() != y_resid.size() || y_resid.size() == 0)
    throw InvalidArgument("r_objective: length mismatch");
  return (y_resid - t_resid.cwiseProduct(tau)).squaredNorm() / static_cast<double>(y_resid.size());
}

double evaluate_cate(const CateEstimate& est, const Matrix& test_x, const CateOracle& oracle) {
  if (test_x.rows() == 0) throw InvalidArgument("evaluate_cate: empty test set");
  const Vector pred = est(test_x);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
    const double d = pred(i) - oracle.effect(test_x.row(i).transpose());
    sum += d * d;
  }
  return sum / static_cast<double>(test_x.rows());
}

void write_cate_csv(std::ostream& out, const CateEstimate& est, const Matrix& x, const CateOracle& oracle) {
  const Vector pred = est(x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) out << 'x' << j + 1 << ',';
  out << "tau_hat,tau_true\n";
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << x(i, j) << ',';
    out << pred(i) << ',' << oracle.effect(x.row(i).transpose()) << '\n';
  }
  out.precision(old);
}

}  // namespace workbench
