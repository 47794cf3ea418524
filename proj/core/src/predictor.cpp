#include "workbench/predictor.hpp"

#include <cmath>
#include <numbers>

#include "workbench/error.hpp"

namespace workbench {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile needs p in (0, 1)");
  // Acklam's rational approximation followed by one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

void PredictiveDistribution::validate() const {
  const auto n = mean.size();
  if (sd.size() != n || quantiles.rows() != n ||
      quantiles.cols() != static_cast<Eigen::Index>(kQuantileLevels.size())) {
    throw InvalidArgument("predictive distribution has inconsistent shapes");
  }
  if (!mean.allFinite() || !sd.allFinite() || !quantiles.allFinite()) {
    throw InvalidArgument("predictive distribution contains non-finite values");
  }
  if ((sd.array() < 0.0).any()) throw InvalidArgument("predictive sd must be non-negative");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index q = 1; q < quantiles.cols(); ++q) {
      if (quantiles(i, q) < quantiles(i, q - 1)) {
        throw InvalidArgument("quantile row " + std::to_string(i) + " is decreasing");
      }
    }
  }
}

PredictiveDistribution PredictiveDistribution::point(Vector mean) {
  PredictiveDistribution out;
  const auto n = mean.size();
  out.sd = Vector::Zero(n);
  out.quantiles = mean.replicate(1, static_cast<Eigen::Index>(kQuantileLevels.size()));
  out.mean = std::move(mean);
  return out;
}

PredictiveDistribution PredictiveDistribution::gaussian(Vector mean, Vector sd) {
  PredictiveDistribution out;
  const auto n = mean.size();
  out.quantiles.resize(n, static_cast<Eigen::Index>(kQuantileLevels.size()));
  for (std::size_t q = 0; q < kQuantileLevels.size(); ++q) {
    const double z = kQuantileLevels[q] == 0.5 ? 0.0 : normal_quantile(kQuantileLevels[q]);
    out.quantiles.col(static_cast<Eigen::Index>(q)) = mean + z * sd;
  }
  out.mean = std::move(mean);
  out.sd = std::move(sd);
  return out;
}

PredictiveDistribution FunctionModel::predict(const Matrix& query) const {
  Vector mean(query.rows());
  Vector row(query.cols());
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    row = query.row(i).transpose();
    mean(i) = f_(row);
  }
  return PredictiveDistribution::point(std::move(mean));
}

}  // namespace workbench
