#pragma once

// Seeded generators for every synthetic data-generating process used by the
// experiments. All generators are pure functions of (arguments, seed).

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "workbench/dataset.hpp"
#include "workbench/random.hpp"

namespace workbench {

/// A real-valued function of one feature row.
using PointFn = std::function<double(const Vector&)>;

/// Evaluates `f` on every row of `x`.
Vector eval_rows(const PointFn& f, const Matrix& x);

// ---------------------------------------------------------------------------
// Semi-supervised M-estimation designs.

enum class SemiSupSetting { Linear, Logistic, Quantile };

SemiSupSetting parse_semisup_setting(std::string_view s);
std::string to_string(SemiSupSetting s);

struct SemiSupPair {
  Dataset labeled;
  Dataset unlabeled;
  SemiSupSetting setting = SemiSupSetting::Linear;
};

inline constexpr double kLogisticIntercept = 11.0;

/// Regression function of the linear design: 1 + 1'x + 1'(x^3 - x^2 + exp(x)).
double semisup_linear_mean(const Vector& x);
/// P(Y=1|x) of the logistic design.
double semisup_logistic_prob(const Vector& x);
/// Location part of the quantile design: 1 + 0.5*1'x + (sum_j x_j)^2.
double semisup_quantile_location(const Vector& x);
/// Heteroscedastic scale vector (0.5 on the first p - floor(p/2) coordinates).
Vector quantile_alpha3(std::size_t p);

/// Draws `n` labeled rows from the design using `rng`.
Dataset sample_semisup(SemiSupSetting setting, std::size_t p, std::size_t n, Rng& rng);

SemiSupPair gen_semisup(SemiSupSetting setting, std::size_t p, std::size_t n, std::size_t m,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Heterogeneous treatment effect designs on Unif([-0.5, 0.5]^6).

enum class CateSetup { A, B, C, D, E, F };

CateSetup parse_cate_setup(std::string_view s);
std::string to_string(CateSetup s);

inline constexpr std::size_t kCateDim = 6;

/// True nuisance and effect functions of a causal design.
///
/// Base and effect values are snapped to a dyadic grid of spacing 2^-44, so
/// mu1 - mu0 == tau and (mu0 + mu1) / 2 == base hold bit-for-bit.
struct CateOracle {
  CateSetup setup = CateSetup::A;

  double propensity(const Vector& x) const;
  double base(const Vector& x) const;
  double effect(const Vector& x) const;
  double mu0(const Vector& x) const;
  double mu1(const Vector& x) const;
  double mu(int t, const Vector& x) const { return t ? mu1(x) : mu0(x); }
  /// E[Y | x] = e(x) mu1(x) + (1 - e(x)) mu0(x).
  double marginal_mean(const Vector& x) const;
};

struct CausalDataset {
  Matrix x;          // n x 6
  Vector treatment;  // 0/1
  Vector outcome;
  CateOracle oracle;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
};

/// sigma2 is the outcome noise variance; 0 yields noiseless outcomes.
CausalDataset gen_cate(CateSetup setup, std::size_t n, double sigma2, std::uint64_t seed);

/// Covariates only, e.g. for a CATE test set.
Matrix gen_cate_features(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Covariate shift between two uniform mixtures on (0, 1).

enum class MeanFn { F1, F2, F3, F4, F5 };

/// Accepts "i".."v", "1".."5" or "F1".."F5".
MeanFn parse_mean_fn(std::string_view s);
std::string to_string(MeanFn f);

double covshift_mean(MeanFn f, double x);
double source_density(double x);
double target_density(double x);
/// p_t(x) / p_s(x): 1/5 on (0, 0.5) and 5 on [0.5, 1).
double covshift_density_ratio(double x);

struct CovShiftBundle {
  Dataset source;
  Dataset target_test;
  Dataset target_aux;  // unlabeled draws from the target covariate law
  MeanFn mean_fn = MeanFn::F1;

  double true_mean(double x) const { return covshift_mean(mean_fn, x); }
  double true_density_ratio(double x) const { return covshift_density_ratio(x); }
};

CovShiftBundle gen_covshift(MeanFn f, std::size_t n, std::size_t m, std::size_t n_aux,
                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Binary classification with homogeneous label noise.

enum class NoiseModel { M1, M2 };

NoiseModel parse_noise_model(std::string_view s);
std::string to_string(NoiseModel m);

inline constexpr std::size_t kNoiseDim = 5;
inline constexpr double kM1Prior = 0.9;

/// Class means of M1: mu_1 = (1.5, 0, 0, 0, 0) = -mu_0.
Vector m1_class_mean(int r);
/// Gaussian discriminant log(pi/(1-pi)) + (x - (mu0+mu1)/2)' (mu1 - mu0) with
/// the true M1 parameters (identity covariance).
double m1_discriminant(const Vector& x);
/// P(Y = 1 | x) under the given model.
double noise_eta(NoiseModel model, const Vector& x);

struct NoisyLabelBundle {
  Dataset train;             // corrupted labels
  Vector train_clean_labels;
  Dataset test;              // clean labels
  double rho = 0.0;
  NoiseModel model = NoiseModel::M1;

  double eta(const Vector& x) const { return noise_eta(model, x); }
  Dataset clean_train() const { return Dataset(train.x, train_clean_labels); }
};

NoisyLabelBundle gen_labelnoise(NoiseModel model, std::size_t n, double rho, std::size_t n_test,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sparse linear regression.

enum class BetaType { I, II };
enum class CovType { Identity, Banded };

BetaType parse_beta_type(std::string_view s);
CovType parse_cov_type(std::string_view s);

/// Zero-based support indices. Type I spreads s indices over 1..p with the
/// rule round(k p / s), clamped and advanced past collisions; type II is the
/// first s indices.
std::vector<std::size_t> beta_support(std::size_t p, std::size_t s, BetaType type);

/// Identity or banded covariance with entry (i, j) = 0.35^|i-j|.
Matrix design_covariance(std::size_t p, CovType type);

struct SparseLinearDesign {
  Vector beta_star;
  std::vector<std::size_t> support;  // zero-based
  BetaType beta_type = BetaType::I;
  CovType cov_type = CovType::Identity;
  double snr = 1.0;
  double sigma2 = 1.0;
  Matrix sigma;
  Dataset train;
  Dataset test;
};

SparseLinearDesign gen_sparse_linear(std::size_t p, std::size_t s, BetaType beta_type,
                                     CovType cov_type, double snr, std::size_t n,
                                     std::size_t n_test, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Low-dimensional function probes for interpolation/extrapolation studies.

enum class ProbeKind {
  Linear1D,
  Quad1D,
  Step1D,
  PiecewiseLinear1D,
  Linear2D,
  Quad2D,
  Step2D,
  Bilinear2D
};

ProbeKind parse_probe_kind(std::string_view s);
std::string to_string(ProbeKind k);
bool is_2d(ProbeKind k);

inline constexpr double kProbeNoiseSd = 0.05;
inline constexpr std::size_t kProbeGrid1D = 161;  // step 0.05 over [-4, 4]
inline constexpr std::size_t kProbeGrid2D = 33;   // per axis, step 0.25

struct FunctionProbe {
  ProbeKind kind = ProbeKind::Linear1D;
  Dataset train;
  Dataset eval_grid;
  PointFn truth;
  double noise_sd = kProbeNoiseSd;
};

/// Continuous 4-piece linear function on [-1, 1] with joins at -0.5, 0, 0.5,
/// value `left` at -1 and the given slopes; extended linearly outside.
PointFn piecewise_linear_1d(double left, const std::array<double, 4>& slopes);

/// Piecewise-bilinear surface over a 4 x 4 cell partition of [-1, 1]^2 from a
/// 5 x 5 grid of corner values (corner (i, j) sits at (-1 + i/2, -1 + j/2)).
/// Points outside the square are clamped onto it.
PointFn bilinear_surface(const Eigen::Matrix<double, 5, 5>& corners);

/// For 1D kinds `n` is the sample size; for 2D kinds the mesh has n x n points.
FunctionProbe gen_function_probe(ProbeKind kind, std::size_t n, std::uint64_t seed);

}  // namespace workbench
