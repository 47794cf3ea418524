#include "workbench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "workbench/error.hpp"
#include "workbench/linear.hpp"

namespace workbench {

BiasVariance bias_variance(const std::vector<Vector>& estimates, const Vector& theta_star) {
  if (estimates.size() < 2) throw InvalidArgument("bias_variance: need at least 2 replicates");
  const auto p = theta_star.size();
  Vector mean = Vector::Zero(p);
  for (const auto& e : estimates) {
    if (e.size() != p) throw InvalidArgument("bias_variance: dimension mismatch");
    mean += e;
  }
  mean /= static_cast<double>(estimates.size());
  BiasVariance bv;
  bv.bias2_by_component = (mean - theta_star).array().square().matrix();
  bv.variance_by_component = Vector::Zero(p);
  for (const auto& e : estimates) bv.variance_by_component += (e - mean).array().square().matrix();
  bv.variance_by_component /= static_cast<double>(estimates.size());
  bv.bias2 = bv.bias2_by_component.sum();
  bv.variance = bv.variance_by_component.sum();
  return bv;
}

double conditional_risk(const Labels& predicted, const NoisyLabelBundle& bundle) {
  const Matrix& x = bundle.test.x;
  if (predicted.size() != static_cast<std::size_t>(x.rows()) || x.rows() == 0)
    throw InvalidArgument("conditional_risk: prediction count does not match the test set");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = bundle.eta(x.row(i).transpose());
    sum += predicted[static_cast<std::size_t>(i)] == 1 ? 1.0 - eta : eta;
  }
  return sum / static_cast<double>(x.rows());
}

double excess_risk(const Labels& predicted, const NoisyLabelBundle& bundle) {
  const Labels bayes = bayes_classify(bundle.model, bundle.test.x);
  if (predicted == bayes) return 0.0;
  return conditional_risk(predicted, bundle) - conditional_risk(bayes, bundle);
}

double test_error(const Labels& predicted, const NoisyLabelBundle& bundle) {
  const Labels truth = to_labels(bundle.test.labels());
  if (predicted.size() != truth.size() || truth.empty())
    throw InvalidArgument("test_error: prediction count does not match the test set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

SurrogateFit linear_surrogate(const Vector& predictions, const Matrix& x, const std::vector<std::size_t>& relevant) {
  if (relevant.empty()) throw InvalidArgument("linear_surrogate: no relevant features");
  if (predictions.size() != x.rows()) throw InvalidArgument("linear_surrogate: prediction count mismatch");
  if (x.rows() <= static_cast<Eigen::Index>(relevant.size()) + 1)
    throw InvalidArgument("linear_surrogate: need more rows than relevant features + 1");
  Matrix xs(x.rows(), static_cast<Eigen::Index>(relevant.size()));
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (relevant[k] >= static_cast<std::size_t>(x.cols())) throw InvalidArgument("linear_surrogate: feature out of range");
    xs.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(relevant[k]));
  }
  const LinearFit fit = ols_fit(xs, predictions);
  const double tss = (predictions.array() - predictions.mean()).square().sum();
  const double rss = (predictions - fit.predict(xs)).squaredNorm();
  SurrogateFit s;
  s.intercept = fit.intercept;
  s.coef = fit.coef;
  // A constant prediction vector is fit perfectly by the intercept alone.
  s.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  return s;
}

SurrogateFit linear_surrogate(const FittedModel& model, const Dataset& test, const std::vector<std::size_t>& relevant) {
  return linear_surrogate(model.predict_mean(test.x), test.x, relevant);
}

AleCurve ale(const FittedModel& model, const Dataset& data, std::size_t feature, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("ale: bins must be >= 2");
  if (feature >= static_cast<std::size_t>(data.x.cols())) throw InvalidArgument("ale: feature out of range");
  const auto j = static_cast<Eigen::Index>(feature);
  const auto n = static_cast<std::size_t>(data.x.rows());
  std::vector<double> sorted(data.x.col(j).data(), data.x.col(j).data() + data.x.rows());
  std::sort(sorted.begin(), sorted.end());
  if (n == 0 || sorted.front() == sorted.back()) throw InvalidArgument("ale: feature is constant");

  AleCurve c;
  c.feature = feature;
  for (std::size_t k = 0; k <= bins; ++k) {
    const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n - 1) /
                                                          static_cast<double>(bins)));
    const double e = sorted[idx];
    if (c.edges.empty() || e > c.edges.back()) c.edges.push_back(e);
  }
  const std::size_t nb = c.edges.size() - 1;

  // Bin k holds (edge_k, edge_{k+1}]; the first bin also takes edge_0.
  std::vector<std::size_t> bin_of(n);
  c.counts.assign(nb, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = data.x(static_cast<Eigen::Index>(i), j);
    auto it = std::lower_bound(c.edges.begin() + 1, c.edges.end(), v);
    bin_of[i] = static_cast<std::size_t>(it - c.edges.begin()) - 1;
    ++c.counts[bin_of[i]];
  }

  Matrix lo = data.x, hi = data.x;
  for (std::size_t i = 0; i < n; ++i) {
    lo(static_cast<Eigen::Index>(i), j) = c.edges[bin_of[i]];
    hi(static_cast<Eigen::Index>(i), j) = c.edges[bin_of[i] + 1];
  }
  const Vector diff = model.predict_mean(hi) - model.predict_mean(lo);
  std::vector<double> effect(nb, 0.0);
  for (std::size_t i = 0; i < n; ++i) effect[bin_of[i]] += diff(static_cast<Eigen::Index>(i));

  c.edge_values.assign(nb + 1, 0.0);
  for (std::size_t k = 0; k < nb; ++k) {
    if (c.counts[k] == 0) throw NumericalError("ale: empty bin");
    c.edge_values[k + 1] = c.edge_values[k] + effect[k] / static_cast<double>(c.counts[k]);
  }
  c.values.resize(nb);
  double center = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    c.values[k] = 0.5 * (c.edge_values[k] + c.edge_values[k + 1]);
    center += static_cast<double>(c.counts[k]) * c.values[k];
  }
  center /= static_cast<double>(n);
  for (double& v : c.values) v -= center;
  for (double& v : c.edge_values) v -= center;
  return c;
}

}  // namespace workbench
