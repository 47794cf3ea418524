#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "workbench/predictor.hpp"

namespace workbench {

/// Isotropic stationary kernel families, each scaled by a constant amplitude.
enum class KernelFamily { ConstRBF, ConstMatern, ConstRatQuad, ConstExpSine, ConstRBFPlusConstMatern };

inline constexpr std::array<KernelFamily, 5> kAllKernelFamilies{
    KernelFamily::ConstRBF, KernelFamily::ConstMatern, KernelFamily::ConstRatQuad,
    KernelFamily::ConstExpSine, KernelFamily::ConstRBFPlusConstMatern};

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view s);

/// Log-parameter layout per family:
///   ConstRBF, ConstMatern (nu = 3/2): [log c, log l]
///   ConstRatQuad:                     [log c, log l, log alpha]
///   ConstExpSine:                     [log c, log l, log period]
///   ConstRBF + ConstMatern:           [log c1, log l1, log c2, log l2]
std::size_t kernel_param_count(KernelFamily f);

/// k(d) for Euclidean distance d.
double kernel_value(KernelFamily f, const Vector& log_params, double d);
/// d k(d) / d log_params.
Vector kernel_gradient(KernelFamily f, const Vector& log_params, double d);

/// Box bounds on the log-parameters used by the optimizer.
void kernel_bounds(KernelFamily f, Vector& lower, Vector& upper);

Matrix pairwise_distances(const Matrix& a, const Matrix& b);

/// Exact log marginal likelihood of y under GP(0, k) + N(0, noise). When
/// `grad` is non-null it receives the gradient with respect to log_params.
/// Throws NumericalError if K + noise I is not positive definite.
double gpr_log_marginal_likelihood(KernelFamily f, const Vector& log_params, double noise,
                                   const Matrix& x, const Vector& y, Vector* grad = nullptr);

struct GprCandidate {
  KernelFamily family;
  double noise;
  Vector log_params;
  double lml;
};

class GprModel final : public FittedModel {
 public:
  /// Posterior for fixed hyperparameters (no optimization).
  static GprModel with_hyperparameters(const Dataset& train, KernelFamily family,
                                       Vector log_params, double noise);

  /// Latent posterior mean and sd; quantiles are Gaussian.
  PredictiveDistribution predict(const Matrix& query) const override;

  KernelFamily family() const { return family_; }
  const Vector& log_params() const { return log_params_; }
  double noise() const { return noise_; }
  double log_marginal_likelihood() const { return lml_; }
  double jitter() const { return jitter_; }
  const Matrix& cholesky_factor() const { return chol_; }
  /// Every optimized (family, noise) candidate considered by fit_gpr.
  const std::vector<GprCandidate>& candidates() const { return candidates_; }

 private:
  friend GprModel fit_gpr(const Dataset&, const std::vector<double>&, std::uint64_t,
                          const std::vector<KernelFamily>&);
  KernelFamily family_ = KernelFamily::ConstRBF;
  Vector log_params_;
  double noise_ = 0.0;
  double lml_ = 0.0;
  double jitter_ = 0.0;
  Matrix train_x_;
  Matrix chol_;  // lower triangular
  Vector alpha_;
  std::vector<GprCandidate> candidates_;
};

inline const std::vector<double> kDefaultNoiseGrid{0.05, 0.1, 0.15, 0.2};

/// Maximizes the log marginal likelihood over kernel families, the noise grid
/// and kernel hyperparameters; returns the global best.
GprModel fit_gpr(const Dataset& train, const std::vector<double>& noise_grid, std::uint64_t seed,
                 const std::vector<KernelFamily>& families = {kAllKernelFamilies.begin(),
                                                              kAllKernelFamilies.end()});

class GprPredictor final : public Predictor {
 public:
  explicit GprPredictor(std::uint64_t seed = 0, std::vector<double> noise_grid = kDefaultNoiseGrid)
      : seed_(seed), noise_grid_(std::move(noise_grid)) {}
  FittedPtr fit(const Dataset& train) const override;
  std::string name() const override { return "gpr"; }

 private:
  std::uint64_t seed_;
  std::vector<double> noise_grid_;
};

}  // namespace workbench
