#include "workbench/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "workbench/error.hpp"

namespace workbench {

namespace {

constexpr double kPi = std::numbers::pi;

// Rounds to a multiple of 2^-44 so sums and differences of the snapped
// values of magnitude below 2^8 stay exact in double precision.
double snap_dyadic(double v) { return std::ldexp(std::nearbyint(std::ldexp(v, 44)), -44); }

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double logistic(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

Matrix correlated_normal(std::size_t n, const Matrix& chol_lower, Rng& rng) {
  const auto p = chol_lower.rows();
  Matrix z(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = standard_normal(rng);
  }
  return z * chol_lower.transpose();
}

Matrix ar1_covariance(std::size_t p, double rho) {
  Matrix s(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    }
  }
  return s;
}

Matrix lower_cholesky(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  return llt.matrixL();
}

Vector linspace(double lo, double hi, std::size_t n) {
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    v(static_cast<Eigen::Index>(i)) =
        n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

Matrix mesh(const Vector& axis) {
  const auto k = axis.size();
  Matrix m(k * k, 2);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      m(i * k + j, 0) = axis(i);
      m(i * k + j, 1) = axis(j);
    }
  }
  return m;
}

}  // namespace

Vector eval_rows(const PointFn& f, const Matrix& x) {
  Vector out(x.rows());
  Vector row(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    row = x.row(i).transpose();
    out(i) = f(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semi-supervised designs.

SemiSupSetting parse_semisup_setting(std::string_view s) {
  if (s == "linear") return SemiSupSetting::Linear;
  if (s == "logistic") return SemiSupSetting::Logistic;
  if (s == "quantile") return SemiSupSetting::Quantile;
  throw InvalidArgument("unknown semi-supervised setting '" + std::string(s) + "'");
}

std::string to_string(SemiSupSetting s) {
  switch (s) {
    case SemiSupSetting::Linear: return "linear";
    case SemiSupSetting::Logistic: return "logistic";
    case SemiSupSetting::Quantile: return "quantile";
  }
  return "?";
}

double semisup_linear_mean(const Vector& x) {
  double v = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double a = x(j);
    v += a + (a * a * a - a * a + std::exp(a));
  }
  return v;
}

double semisup_logistic_prob(const Vector& x) {
  double eta = kLogisticIntercept;
  for (Eigen::Index j = 0; j < x.size(); ++j) eta += x(j) - x(j) * x(j);
  return logistic(eta);
}

double semisup_quantile_location(const Vector& x) {
  const double s = x.sum();
  return 1.0 + 0.5 * s + s * s;
}

Vector quantile_alpha3(std::size_t p) {
  Vector a = Vector::Zero(static_cast<Eigen::Index>(p));
  a.head(static_cast<Eigen::Index>(p - p / 2)).setConstant(0.5);
  return a;
}

Dataset sample_semisup(SemiSupSetting setting, std::size_t p, std::size_t n, Rng& rng) {
  if (p == 0) throw InvalidArgument("semi-supervised design needs p >= 1");
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);
  Dataset d;
  d.x.resize(rows, cols);
  Vector y(rows);
  Vector row(cols);

  switch (setting) {
    case SemiSupSetting::Linear:
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) d.x(i, j) = standard_normal(rng);
        row = d.x.row(i).transpose();
        y(i) = semisup_linear_mean(row) + 2.0 * standard_normal(rng);
      }
      break;
    case SemiSupSetting::Logistic: {
      const Matrix chol = lower_cholesky(ar1_covariance(p, 0.5));
      Vector z(cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        const double centre = bernoulli(rng, 0.5) ? 1.0 : -1.0;
        for (Eigen::Index j = 0; j < cols; ++j) z(j) = standard_normal(rng);
        row = chol * z;
        row.array() += centre;
        d.x.row(i) = row.transpose();
        y(i) = bernoulli(rng, semisup_logistic_prob(row)) ? 1.0 : 0.0;
      }
      break;
    }
    case SemiSupSetting::Quantile: {
      const Vector a3 = quantile_alpha3(p);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) d.x(i, j) = standard_normal(rng);
        row = d.x.row(i).transpose();
        y(i) = semisup_quantile_location(row) + (1.0 + a3.dot(row)) * standard_normal(rng);
      }
      break;
    }
  }
  d.y = std::move(y);
  return d;
}

SemiSupPair gen_semisup(SemiSupSetting setting, std::size_t p, std::size_t n, std::size_t m,
                        std::uint64_t seed) {
  if (p == 0) throw InvalidArgument("semi-supervised design needs p >= 1");
  if (n == 0 || m == 0) throw InvalidArgument("semi-supervised design needs n, m >= 1");
  Rng labeled_rng = make_rng(derive_seed(seed, 1));
  Rng unlabeled_rng = make_rng(derive_seed(seed, 2));
  SemiSupPair pair;
  pair.setting = setting;
  pair.labeled = sample_semisup(setting, p, n, labeled_rng);
  pair.unlabeled = sample_semisup(setting, p, m, unlabeled_rng).unlabeled();
  return pair;
}

// ---------------------------------------------------------------------------
// Causal designs.

CateSetup parse_cate_setup(std::string_view s) {
  if (s.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    if (c >= 'A' && c <= 'F') return static_cast<CateSetup>(c - 'A');
  }
  throw InvalidArgument("unknown CATE setup '" + std::string(s) + "'");
}

std::string to_string(CateSetup s) { return std::string(1, static_cast<char>('A' + static_cast<int>(s))); }

double CateOracle::propensity(const Vector& x) const {
  switch (setup) {
    case CateSetup::A: return std::min(0.8, std::max(std::sin(kPi * x(0) * x(1)), 0.2));
    case CateSetup::B: return 0.5;
    case CateSetup::C: return 1.0 / (1.0 + std::exp(x(1) + x(2)));
    case CateSetup::D: return 1.0 / (1.0 + std::exp(-x(0)) + std::exp(-x(1)));
    case CateSetup::E:
    case CateSetup::F: return 1.0 / (1.0 + std::exp(3.0 * x(1) + 3.0 * x(2)));
  }
  return 0.5;
}

double CateOracle::base(const Vector& x) const {
  double b = 0.0;
  switch (setup) {
    case CateSetup::A:
      b = std::sin(kPi * x(0) * x(1)) + 2.0 * (x(2) - 0.5) * (x(2) - 0.5) + x(3) + 0.5 * x(4);
      break;
    case CateSetup::B:
      b = std::max({0.0, x(0) + x(1), x(2)}) + std::max(0.0, x(3) + x(4));
      break;
    case CateSetup::C:
      b = 2.0 * softplus(x(0) + x(1) + x(2));
      break;
    case CateSetup::D:
      b = 0.5 * std::max(0.0, x(0) + x(1) + x(2)) + 0.5 * std::max(0.0, x(3) + x(4));
      break;
    case CateSetup::E:
    case CateSetup::F:
      b = 5.0 * std::max(0.0, x(0) + x(1));
      break;
  }
  return snap_dyadic(b);
}

double CateOracle::effect(const Vector& x) const {
  double t = 0.0;
  switch (setup) {
    case CateSetup::A: t = 0.2 + (x(0) + x(1)) / 2.0; break;
    case CateSetup::B:
    case CateSetup::F: t = x(0) + softplus(x(1)); break;
    case CateSetup::C: t = 1.0; break;
    case CateSetup::D: t = std::max(0.0, x(0) + x(1) + x(2)) - std::max(0.0, x(3) + x(4)); break;
    case CateSetup::E: t = (x(0) > 0.1 || x(1) > 0.1) ? 1.0 : -1.0; break;
  }
  return snap_dyadic(t);
}

double CateOracle::mu0(const Vector& x) const { return base(x) - effect(x) / 2.0; }
double CateOracle::mu1(const Vector& x) const { return base(x) + effect(x) / 2.0; }

double CateOracle::marginal_mean(const Vector& x) const {
  const double e = propensity(x);
  return e * mu1(x) + (1.0 - e) * mu0(x);
}

Matrix gen_cate_features(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kCateDim));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = uniform(rng, -0.5, 0.5);
  }
  return x;
}

CausalDataset gen_cate(CateSetup setup, std::size_t n, double sigma2, std::uint64_t seed) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw InvalidArgument("CATE noise variance must be finite and non-negative");
  }
  CausalDataset d;
  d.oracle.setup = setup;
  d.x = gen_cate_features(n, derive_seed(seed, 1));
  Rng rng = make_rng(derive_seed(seed, 2));
  const double sd = std::sqrt(sigma2);
  d.treatment.resize(d.x.rows());
  d.outcome.resize(d.x.rows());
  Vector row(d.x.cols());
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    row = d.x.row(i).transpose();
    const int t = bernoulli(rng, d.oracle.propensity(row)) ? 1 : 0;
    d.treatment(i) = t;
    d.outcome(i) = d.oracle.mu(t, row) + sd * standard_normal(rng);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Covariate shift.

MeanFn parse_mean_fn(std::string_view s) {
  static constexpr std::array<std::string_view, 5> roman{"i", "ii", "iii", "iv", "v"};
  for (std::size_t k = 0; k < roman.size(); ++k) {
    const std::string digit = std::to_string(k + 1);
    if (s == roman[k] || s == digit || s == "F" + digit || s == "f" + digit) {
      return static_cast<MeanFn>(k);
    }
  }
  throw InvalidArgument("unknown mean function '" + std::string(s) + "'");
}

std::string to_string(MeanFn f) {
  static constexpr std::array<const char*, 5> roman{"i", "ii", "iii", "iv", "v"};
  return roman[static_cast<std::size_t>(f)];
}

double covshift_mean(MeanFn f, double x) {
  switch (f) {
    case MeanFn::F1: return std::cos(2.0 * kPi * x) - 1.0;
    case MeanFn::F2: return std::sin(2.0 * kPi * x);
    case MeanFn::F3: return std::abs(x - 0.5) - 0.5;
    case MeanFn::F4: {
      const double f1 = std::min(1.0, std::max(4.0 * x - 1.0, 0.0));
      const double f2 = std::min(1.0, std::max(4.0 * x - 3.0, 0.0));
      return f1 + f2 - 2.0;
    }
    case MeanFn::F5: return x * std::sin(4.0 * kPi * x);
  }
  return 0.0;
}

double source_density(double x) {
  if (x < 0.0 || x >= 1.0) return 0.0;
  return x < 0.5 ? (5.0 / 6.0) * 2.0 : (1.0 / 6.0) * 2.0;
}

double target_density(double x) {
  if (x < 0.0 || x >= 1.0) return 0.0;
  return x < 0.5 ? (1.0 / 6.0) * 2.0 : (5.0 / 6.0) * 2.0;
}

double covshift_density_ratio(double x) { return x < 0.5 ? 1.0 / 5.0 : 5.0; }

namespace {

// Two-component uniform mixture with weight `w_low` on (0, 0.5).
double draw_mixture(Rng& rng, double w_low) {
  return bernoulli(rng, w_low) ? uniform(rng, 0.0, 0.5) : uniform(rng, 0.5, 1.0);
}

Dataset covshift_sample(MeanFn f, std::size_t n, double w_low, bool labeled, Rng& rng) {
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), 1);
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    d.x(i, 0) = draw_mixture(rng, w_low);
    if (labeled) y(i) = covshift_mean(f, d.x(i, 0)) + standard_normal(rng);
  }
  if (labeled) d.y = std::move(y);
  return d;
}

}  // namespace

CovShiftBundle gen_covshift(MeanFn f, std::size_t n, std::size_t m, std::size_t n_aux,
                            std::uint64_t seed) {
  if (n == 0 || m == 0 || n_aux == 0) throw InvalidArgument("covariate-shift sizes must be >= 1");
  Rng src = make_rng(derive_seed(seed, 1));
  Rng tst = make_rng(derive_seed(seed, 2));
  Rng aux = make_rng(derive_seed(seed, 3));
  CovShiftBundle b;
  b.mean_fn = f;
  b.source = covshift_sample(f, n, 5.0 / 6.0, true, src);
  b.target_test = covshift_sample(f, m, 1.0 / 6.0, true, tst);
  b.target_aux = covshift_sample(f, n_aux, 1.0 / 6.0, false, aux);
  return b;
}

// ---------------------------------------------------------------------------
// Label noise.

NoiseModel parse_noise_model(std::string_view s) {
  if (s == "M1" || s == "m1") return NoiseModel::M1;
  if (s == "M2" || s == "m2") return NoiseModel::M2;
  throw InvalidArgument("unknown label-noise model '" + std::string(s) + "'");
}

std::string to_string(NoiseModel m) { return m == NoiseModel::M1 ? "M1" : "M2"; }

Vector m1_class_mean(int r) {
  Vector mu = Vector::Zero(kNoiseDim);
  mu(0) = r ? 1.5 : -1.5;
  return mu;
}

double m1_discriminant(const Vector& x) {
  const Vector mu0 = m1_class_mean(0);
  const Vector mu1 = m1_class_mean(1);
  return std::log(kM1Prior / (1.0 - kM1Prior)) + (x - 0.5 * (mu0 + mu1)).dot(mu1 - mu0);
}

double noise_eta(NoiseModel model, const Vector& x) {
  if (model == NoiseModel::M1) return logistic(m1_discriminant(x));
  const double a = x(0) - 0.5;
  const double b = x(1) - 0.5;
  return std::min(4.0 * a * a + 4.0 * b * b, 1.0);
}

namespace {

Dataset noise_sample(NoiseModel model, std::size_t n, Rng& rng) {
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNoiseDim));
  Vector y(static_cast<Eigen::Index>(n));
  Vector row(static_cast<Eigen::Index>(kNoiseDim));
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    if (model == NoiseModel::M1) {
      const int label = bernoulli(rng, kM1Prior) ? 1 : 0;
      const Vector mu = m1_class_mean(label);
      for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = mu(j) + standard_normal(rng);
      y(i) = label;
    } else {
      for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = uniform01(rng);
      y(i) = bernoulli(rng, noise_eta(model, row)) ? 1.0 : 0.0;
    }
    d.x.row(i) = row.transpose();
  }
  d.y = std::move(y);
  return d;
}

}  // namespace

NoisyLabelBundle gen_labelnoise(NoiseModel model, std::size_t n, double rho, std::size_t n_test,
                                std::uint64_t seed) {
  if (!(rho >= 0.0 && rho < 0.5)) throw InvalidArgument("label corruption rho must lie in [0, 0.5)");
  if (n == 0 || n_test == 0) throw InvalidArgument("label-noise sizes must be >= 1");
  Rng train_rng = make_rng(derive_seed(seed, 1));
  Rng test_rng = make_rng(derive_seed(seed, 2));
  Rng flip_rng = make_rng(derive_seed(seed, 3));
  NoisyLabelBundle b;
  b.model = model;
  b.rho = rho;
  Dataset clean = noise_sample(model, n, train_rng);
  b.train_clean_labels = *clean.y;
  Vector noisy = b.train_clean_labels;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) {
    if (bernoulli(flip_rng, rho)) noisy(i) = 1.0 - noisy(i);
  }
  b.train = Dataset(std::move(clean.x), std::move(noisy));
  b.test = noise_sample(model, n_test, test_rng);
  return b;
}

// ---------------------------------------------------------------------------
// Sparse linear regression.

BetaType parse_beta_type(std::string_view s) {
  if (s == "I" || s == "1") return BetaType::I;
  if (s == "II" || s == "2") return BetaType::II;
  throw InvalidArgument("unknown beta type '" + std::string(s) + "'");
}

CovType parse_cov_type(std::string_view s) {
  if (s == "identity") return CovType::Identity;
  if (s == "banded") return CovType::Banded;
  throw InvalidArgument("unknown covariance type '" + std::string(s) + "'");
}

std::vector<std::size_t> beta_support(std::size_t p, std::size_t s, BetaType type) {
  if (s < 1 || s > p) throw InvalidArgument("sparsity s must satisfy 1 <= s <= p");
  std::vector<std::size_t> support;
  support.reserve(s);
  if (type == BetaType::II) {
    for (std::size_t k = 0; k < s; ++k) support.push_back(k);
    return support;
  }
  std::vector<bool> used(p + 1, false);
  for (std::size_t k = 0; k < s; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(p) / static_cast<double>(s);
    auto idx = static_cast<std::size_t>(std::llround(pos));
    idx = std::clamp<std::size_t>(idx, 1, p);
    while (used[idx]) idx = idx % p + 1;
    used[idx] = true;
    support.push_back(idx - 1);
  }
  std::sort(support.begin(), support.end());
  return support;
}

Matrix design_covariance(std::size_t p, CovType type) {
  if (type == CovType::Identity) {
    return Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  }
  return ar1_covariance(p, 0.35);
}

SparseLinearDesign gen_sparse_linear(std::size_t p, std::size_t s, BetaType beta_type,
                                     CovType cov_type, double snr, std::size_t n,
                                     std::size_t n_test, std::uint64_t seed) {
  if (s < 1 || s > p) throw InvalidArgument("sparsity s must satisfy 1 <= s <= p");
  if (!(snr > 0.0)) throw InvalidArgument("snr must be positive");
  if (n == 0 || n_test == 0) throw InvalidArgument("sparse design sizes must be >= 1");
  SparseLinearDesign d;
  d.beta_type = beta_type;
  d.cov_type = cov_type;
  d.snr = snr;
  d.support = beta_support(p, s, beta_type);
  d.beta_star = Vector::Zero(static_cast<Eigen::Index>(p));
  for (auto j : d.support) d.beta_star(static_cast<Eigen::Index>(j)) = 1.0;
  d.sigma = design_covariance(p, cov_type);
  d.sigma2 = d.beta_star.dot(d.sigma * d.beta_star) / snr;

  const Matrix chol = lower_cholesky(d.sigma);
  const double sd = std::sqrt(d.sigma2);
  auto draw = [&](std::size_t rows, std::uint64_t stream) {
    Rng rng = make_rng(derive_seed(seed, stream));
    Matrix x = correlated_normal(rows, chol, rng);
    Vector y = x * d.beta_star;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * standard_normal(rng);
    return Dataset(std::move(x), std::move(y));
  };
  d.train = draw(n, 1);
  d.test = draw(n_test, 2);
  return d;
}

// ---------------------------------------------------------------------------
// Function probes.

ProbeKind parse_probe_kind(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, ProbeKind>, 8> names{{
      {"linear1d", ProbeKind::Linear1D},
      {"quad1d", ProbeKind::Quad1D},
      {"step1d", ProbeKind::Step1D},
      {"piecewise1d", ProbeKind::PiecewiseLinear1D},
      {"linear2d", ProbeKind::Linear2D},
      {"quad2d", ProbeKind::Quad2D},
      {"step2d", ProbeKind::Step2D},
      {"bilinear2d", ProbeKind::Bilinear2D},
  }};
  for (const auto& [name, kind] : names) {
    if (s == name) return kind;
  }
  throw InvalidArgument("unknown probe kind '" + std::string(s) + "'");
}

std::string to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::Linear1D: return "linear1d";
    case ProbeKind::Quad1D: return "quad1d";
    case ProbeKind::Step1D: return "step1d";
    case ProbeKind::PiecewiseLinear1D: return "piecewise1d";
    case ProbeKind::Linear2D: return "linear2d";
    case ProbeKind::Quad2D: return "quad2d";
    case ProbeKind::Step2D: return "step2d";
    case ProbeKind::Bilinear2D: return "bilinear2d";
  }
  return "?";
}

bool is_2d(ProbeKind k) {
  return k == ProbeKind::Linear2D || k == ProbeKind::Quad2D || k == ProbeKind::Step2D ||
         k == ProbeKind::Bilinear2D;
}

PointFn piecewise_linear_1d(double left, const std::array<double, 4>& slopes) {
  // Knot values at -1, -0.5, 0, 0.5, 1.
  std::array<double, 5> knots{};
  knots[0] = left;
  for (std::size_t k = 0; k < 4; ++k) knots[k + 1] = knots[k] + 0.5 * slopes[k];
  return [knots, slopes](const Vector& x) {
    const double v = x(0);
    const auto piece = static_cast<std::size_t>(std::clamp(std::floor((v + 1.0) / 0.5), 0.0, 3.0));
    const double start = -1.0 + 0.5 * static_cast<double>(piece);
    return knots[piece] + slopes[piece] * (v - start);
  };
}

PointFn bilinear_surface(const Eigen::Matrix<double, 5, 5>& corners) {
  return [corners](const Vector& x) {
    // Map [-1, 1] onto [0, 1]; each of the 4 cells has width 1/4 there.
    const double u1 = std::clamp((x(0) + 1.0) / 2.0, 0.0, 1.0);
    const double u2 = std::clamp((x(1) + 1.0) / 2.0, 0.0, 1.0);
    const int i = std::min(static_cast<int>(std::floor(4.0 * u1)), 3);
    const int j = std::min(static_cast<int>(std::floor(4.0 * u2)), 3);
    const double l1 = 4.0 * u1 - i;
    const double l2 = 4.0 * u2 - j;
    return corners(i, j) * (1.0 - l1) * (1.0 - l2) + corners(i + 1, j) * l1 * (1.0 - l2) +
           corners(i, j + 1) * (1.0 - l1) * l2 + corners(i + 1, j + 1) * l1 * l2;
  };
}

FunctionProbe gen_function_probe(ProbeKind kind, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("function probe needs n >= 2");
  Rng shape_rng = make_rng(derive_seed(seed, 1));
  Rng input_rng = make_rng(derive_seed(seed, 2));
  Rng noise_rng = make_rng(derive_seed(seed, 3));

  FunctionProbe probe;
  probe.kind = kind;
  switch (kind) {
    case ProbeKind::Linear1D: probe.truth = [](const Vector& x) { return x(0); }; break;
    case ProbeKind::Quad1D: probe.truth = [](const Vector& x) { return x(0) * x(0); }; break;
    case ProbeKind::Step1D:
      probe.truth = [](const Vector& x) { return x(0) >= 0.0 ? 1.0 : -1.0; };
      break;
    case ProbeKind::PiecewiseLinear1D: {
      const double left = uniform(shape_rng, -1.0, 1.0);
      std::array<double, 4> slopes{};
      for (auto& s : slopes) s = uniform(shape_rng, -2.0, 2.0);
      probe.truth = piecewise_linear_1d(left, slopes);
      break;
    }
    case ProbeKind::Linear2D: probe.truth = [](const Vector& x) { return x(0) + x(1); }; break;
    case ProbeKind::Quad2D:
      probe.truth = [](const Vector& x) { return x(0) * x(0) + x(1) * x(1); };
      break;
    case ProbeKind::Step2D:
      probe.truth = [](const Vector& x) { return (x(0) < 0.0 && x(1) < 0.0) ? -1.0 : 1.0; };
      break;
    case ProbeKind::Bilinear2D: {
      Eigen::Matrix<double, 5, 5> corners;
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) corners(i, j) = uniform(shape_rng, -1.0, 1.0);
      }
      probe.truth = bilinear_surface(corners);
      break;
    }
  }

  Matrix train_x;
  if (is_2d(kind)) {
    train_x = mesh(linspace(-1.0, 1.0, n));
    probe.eval_grid = Dataset(mesh(linspace(-4.0, 4.0, kProbeGrid2D)));
  } else {
    train_x.resize(static_cast<Eigen::Index>(n), 1);
    for (Eigen::Index i = 0; i < train_x.rows(); ++i) train_x(i, 0) = uniform(input_rng, -1.0, 1.0);
    probe.eval_grid = Dataset(Matrix(linspace(-4.0, 4.0, kProbeGrid1D)));
  }
  Vector y = eval_rows(probe.truth, train_x);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += kProbeNoiseSd * standard_normal(noise_rng);
  probe.train = Dataset(std::move(train_x), std::move(y));
  return probe;
}

}  // namespace workbench
