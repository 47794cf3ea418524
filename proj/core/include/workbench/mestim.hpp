#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "workbench/predictor.hpp"
#include "workbench/synthgen.hpp"

namespace workbench {

enum class WorkingModelKind { LinearReg, LogisticReg, QuantileReg };

struct WorkingModel {
  WorkingModelKind kind = WorkingModelKind::LinearReg;
  double tau = 0.5;  // quantile level, QuantileReg only

  static WorkingModel linear() { return {WorkingModelKind::LinearReg, 0.5}; }
  static WorkingModel logistic() { return {WorkingModelKind::LogisticReg, 0.5}; }
  static WorkingModel quantile(double tau) { return {WorkingModelKind::QuantileReg, tau}; }

  void validate() const;
  /// The working model matching a semi-supervised design.
  static WorkingModel for_setting(SemiSupSetting s, double tau = 0.5);
};

std::string to_string(WorkingModelKind k);

struct ThetaEstimate {
  Vector theta;  // intercept first
  double objective = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  std::string method;

  /// {"theta": [...], "objective": .., "grad_norm": .., "iterations": .., "method": ".."}
  std::string to_json() const;
};

/// [1, x] design.
Matrix augment_intercept(const Matrix& x);

/// Sum of per-sample losses: squared/2, logistic log-loss, or check loss.
double erm_objective(const WorkingModel& model, const Matrix& x, const Vector& y, const Vector& theta);

/// Gradient of erm_objective (a subgradient with sign(0) = +1 for the check loss).
Vector erm_gradient(const WorkingModel& model, const Matrix& x, const Vector& y, const Vector& theta);

/// Empirical risk minimizer over theta in R^{p+1}. Logistic labels may be soft
/// (any value in [0, 1]).
ThetaEstimate erm(const WorkingModel& model, const Dataset& data);
ThetaEstimate erm(const WorkingModel& model, const Matrix& x, const Vector& y);

enum class SemisupStrategy { Vanilla, ImputeI, DebiasD, PPIOriginal };

std::string to_string(SemisupStrategy s);
SemisupStrategy parse_semisup_strategy(std::string_view s);

struct SemisupDetail {
  ThetaEstimate result;
  /// Fields below are filled for strategies that use the imputer.
  std::optional<Vector> delta;               // erm(D^_L) - erm(D_L)
  std::optional<ThetaEstimate> labeled_fit;  // erm(D_L)
  std::optional<ThetaEstimate> imputed_labeled_fit;  // erm(D^_L)
  std::optional<ThetaEstimate> pooled_fit;   // erm(D^_L u D^_U)
  std::optional<ThetaEstimate> unlabeled_fit;  // erm(D^_U)
  Vector imputed_labeled;
  Vector imputed_unlabeled;
};

SemisupDetail semisup_estimate_detail(SemisupStrategy strategy, const WorkingModel& model,
                                      const Predictor* imputer, const Dataset& labeled,
                                      const Dataset& unlabeled);

ThetaEstimate semisup_estimate(SemisupStrategy strategy, const WorkingModel& model,
                               const Predictor* imputer, const Dataset& labeled,
                               const Dataset& unlabeled);

struct McTruth {
  Vector theta;
  std::size_t samples = 0;  // samples actually used
  std::string note;         // non-empty when n_mc was capped
};

inline constexpr std::size_t kQuantileMcCap = 1000000;

/// Monte-Carlo ground truth: the ERM over n_mc fresh draws. Batches are seeded
/// individually and reduced in a fixed order, so `workers` never changes the
/// result.
McTruth mc_truth(SemiSupSetting setting, std::size_t p, std::optional<double> tau, std::size_t n_mc,
                 std::uint64_t seed, unsigned workers = 1);

/// Propensity/classifier learner backed by logistic ERM; predicts P(Y=1|x).
class LogisticPropensity final : public Predictor {
 public:
  FittedPtr fit(const Dataset& train) const override;
  std::string name() const override { return "logistic"; }
};

}  // namespace workbench
