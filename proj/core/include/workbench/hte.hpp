#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "workbench/predictor.hpp"
#include "workbench/synthgen.hpp"

namespace workbench {

enum class CateLearner { S, T, X, R, DR, OracleR };

std::string to_string(CateLearner l);
CateLearner parse_cate_learner(std::string_view s);

inline constexpr double kDefaultPropensityClip = 0.01;
/// R-learner rows with |T - e(x)| below this are dropped.
inline constexpr double kMinTreatmentResidual = 1e-6;

struct CateEstimate {
  CateLearner learner = CateLearner::S;
  /// Keys among mu, mu0, mu1, e, m, tau0, tau1, tau depending on the recipe.
  std::map<std::string, FittedPtr> components;
  std::function<Vector(const Matrix&)> tau_hat;
  /// DR: pseudo-outcomes. R: Y~/T~ targets of the kept rows.
  Vector pseudo_outcome;
  /// R only: T~^2 weights of the kept rows.
  Vector weights;
  std::size_t dropped_rows = 0;

  Vector operator()(const Matrix& x) const { return tau_hat(x); }
};

CateEstimate s_learner(const Predictor& base, const CausalDataset& data);
CateEstimate t_learner(const Predictor& base, const CausalDataset& data);
/// No clipping beyond [0, 1]; e = 0 or 1 collapses to one arm's effect model.
CateEstimate x_learner(const Predictor& base, const Predictor& propensity, const CausalDataset& data);

/// T(Y - mu1)/e - (1 - T)(Y - mu0)/(1 - e) + mu1 - mu0 with e clipped to [clip, 1 - clip].
Vector dr_pseudo_outcome(const Vector& y, const Vector& t, const Vector& mu0, const Vector& mu1,
                         const Vector& e, double clip);
CateEstimate dr_learner(const Predictor& base, const Predictor& propensity, const CausalDataset& data,
                        double clip = kDefaultPropensityClip);

CateEstimate r_learner(const WeightedRegressor& base, const Predictor& mhat, const Predictor& ehat,
                       const CausalDataset& data, double clip = kDefaultPropensityClip);
/// R-learner with m and e taken from the data's oracle.
CateEstimate oracle_r_learner(const WeightedRegressor& base, const CausalDataset& data,
                              double clip = kDefaultPropensityClip);

/// mean((Y~ - T~ tau)^2).
double r_objective(const Vector& y_resid, const Vector& t_resid, const Vector& tau);

/// Mean squared error of tau_hat against the oracle effect.
double evaluate_cate(const CateEstimate& est, const Matrix& test_x, const CateOracle& oracle);

/// Columns x1..xp, tau_hat, tau_true.
void write_cate_csv(std::ostream& out, const CateEstimate& est, const Matrix& x, const CateOracle& oracle);

}  // namespace workbench
