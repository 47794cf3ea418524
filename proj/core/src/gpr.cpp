#include "workbench/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "workbench/error.hpp"
#include "workbench/random.hpp"

namespace workbench {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

double rbf(double c, double l, double d) { return c * std::exp(-0.5 * d * d / (l * l)); }

double matern(double c, double l, double d) {
  const double r = kSqrt3 * d / l;
  return c * (1.0 + r) * std::exp(-r);
}

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Kernel with its log-parameters exponentiated once.
struct KernelEval {
  KernelFamily f;
  double c, l, p2 = 0.0, p3 = 0.0;

  KernelEval(KernelFamily fam, const Vector& lp) : f(fam), c(std::exp(lp(0))), l(std::exp(lp(1))) {
    if (lp.size() > 2) p2 = std::exp(lp(2));
    if (lp.size() > 3) p3 = std::exp(lp(3));
  }

  double value(double d) const {
    switch (f) {
      case KernelFamily::ConstRBF: return rbf(c, l, d);
      case KernelFamily::ConstMatern: return matern(c, l, d);
      case KernelFamily::ConstRatQuad: return c * std::pow(1.0 + d * d / (2.0 * p2 * l * l), -p2);
      case KernelFamily::ConstExpSine: {
        const double s = std::sin(std::numbers::pi * d / p2);
        return c * std::exp(-2.0 * s * s / (l * l));
      }
      case KernelFamily::ConstRBFPlusConstMatern: return rbf(c, l, d) + matern(p2, p3, d);
    }
    return 0.0;
  }

  // Derivatives with respect to the log-parameters, written into g.
  void gradient(double d, double* g) const {
    auto rbf_part = [&](double cc, double ll, int at) {
      const double k = rbf(cc, ll, d);
      g[at] = k;
      g[at + 1] = k * d * d / (ll * ll);
    };
    auto matern_part = [&](double cc, double ll, int at) {
      const double r = kSqrt3 * d / ll;
      const double e = std::exp(-r);
      g[at] = cc * (1.0 + r) * e;
      g[at + 1] = cc * r * r * e;
    };
    switch (f) {
      case KernelFamily::ConstRBF: rbf_part(c, l, 0); break;
      case KernelFamily::ConstMatern: matern_part(c, l, 0); break;
      case KernelFamily::ConstRatQuad: {
        const double a = p2;
        const double u = d * d / (2.0 * a * l * l);
        const double base = 1.0 + u;
        const double k = c * std::pow(base, -a);
        g[0] = k;
        g[1] = k * d * d / (l * l * base);
        g[2] = a * k * (-std::log1p(u) + u / base);
        break;
      }
      case KernelFamily::ConstExpSine: {
        const double arg = std::numbers::pi * d / p2;
        const double s = std::sin(arg);
        const double k = c * std::exp(-2.0 * s * s / (l * l));
        g[0] = k;
        g[1] = k * 4.0 * s * s / (l * l);
        g[2] = k * 4.0 * s * std::cos(arg) * arg / (l * l);
        break;
      }
      case KernelFamily::ConstRBFPlusConstMatern:
        rbf_part(c, l, 0);
        matern_part(p2, p3, 2);
        break;
    }
  }
};

Matrix kernel_matrix(KernelFamily f, const Vector& lp, const Matrix& dist) {
  const KernelEval ke(f, lp);
  Matrix k(dist.rows(), dist.cols());
  for (Eigen::Index j = 0; j < dist.cols(); ++j)
    for (Eigen::Index i = 0; i < dist.rows(); ++i) k(i, j) = ke.value(dist(i, j));
  return k;
}

// Symmetric case: fills the lower triangle and mirrors it.
Matrix kernel_matrix_sym(const KernelEval& ke, const Matrix& dist) {
  const auto n = dist.rows();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = ke.value(0.0);
    for (Eigen::Index i = j + 1; i < n; ++i) k(i, j) = k(j, i) = ke.value(dist(i, j));
  }
  return k;
}

double lml_from_dist(KernelFamily f, const Vector& lp, double noise, const Matrix& dist,
                     const Vector& y, Vector* grad) {
  const auto n = dist.rows();
  const KernelEval ke(f, lp);
  Matrix k = kernel_matrix_sym(ke, dist);
  k.diagonal().array() += noise;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError("gpr: covariance not positive definite");
  const Vector alpha = llt.solve(y);
  const Matrix& l = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(l(i, i));
  const double lml = -0.5 * y.dot(alpha) - logdet - 0.5 * static_cast<double>(n) *
                                                        std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(lml)) throw NumericalError("gpr: non-finite log marginal likelihood");
  if (grad) {
    const Matrix kinv = llt.solve(Matrix::Identity(n, n));
    const auto np = lp.size();
    double acc[4] = {0, 0, 0, 0};
    double g[4];
    for (Eigen::Index j = 0; j < n; ++j) {
      ke.gradient(0.0, g);
      const double wd = alpha(j) * alpha(j) - kinv(j, j);
      for (Eigen::Index q = 0; q < np; ++q) acc[q] += wd * g[q];
      for (Eigen::Index i = j + 1; i < n; ++i) {
        ke.gradient(dist(i, j), g);
        const double w = 2.0 * (alpha(i) * alpha(j) - kinv(i, j));
        for (Eigen::Index q = 0; q < np; ++q) acc[q] += w * g[q];
      }
    }
    grad->resize(np);
    for (Eigen::Index q = 0; q < np; ++q) (*grad)(q) = 0.5 * acc[q];
  }
  return lml;
}

// Box-constrained BFGS minimizing `neg` (negative LML). Infeasible points
// (non-PD covariance) count as +inf.
struct Objective {
  KernelFamily f;
  double noise;
  const Matrix& dist;
  const Vector& y;

  double value(const Vector& x) const {
    try {
      return -lml_from_dist(f, x, noise, dist, y, nullptr);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  double operator()(const Vector& x, Vector& g) const {
    try {
      Vector grad;
      const double v = lml_from_dist(f, x, noise, dist, y, &grad);
      g = -grad;
      return -v;
    } catch (const NumericalError&) {
      g = Vector::Zero(x.size());
      return std::numeric_limits<double>::infinity();
    }
  }
};

Vector clamp(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vector minimize_box(const Objective& obj, Vector x, const Vector& lo, const Vector& hi,
                    double& fx) {
  x = clamp(x, lo, hi);
  Vector g;
  fx = obj(x, g);
  if (!std::isfinite(fx)) return x;
  const auto np = x.size();
  Matrix h = Matrix::Identity(np, np);
  for (int it = 0; it < 300; ++it) {
    const Vector pg = x - clamp(x - g, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() < 1e-9) break;
    Vector d = -h * g;
    if (g.dot(d) >= 0.0) {
      h.setIdentity();
      d = -g;
    }
    for (Eigen::Index k = 0; k < np; ++k) {
      if ((x(k) <= lo(k) && d(k) < 0.0) || (x(k) >= hi(k) && d(k) > 0.0)) d(k) = 0.0;
    }
    if (d.lpNorm<Eigen::Infinity>() == 0.0) break;
    // Large log-space moves are rarely sensible.
    const double dn = d.lpNorm<Eigen::Infinity>();
    if (dn > 5.0) d *= 5.0 / dn;

    double step = 1.0;
    Vector xn, gn;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      xn = clamp(x + step * d, lo, hi);
      fn = obj.value(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) fn = obj(xn, gn);
    if (!accepted) {
      if (!h.isIdentity()) {
        h.setIdentity();
        continue;
      }
      break;
    }
    const Vector s = xn - x;
    const Vector yv = gn - g;
    const double sy = s.dot(yv);
    const double fprev = fx;
    x = xn;
    g = gn;
    fx = fn;
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Matrix i_n = Matrix::Identity(np, np);
      h = (i_n - rho * s * yv.transpose()) * h * (i_n - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    }
    if (std::abs(fprev - fx) <= 1e-13 * (1.0 + std::abs(fx)) && s.lpNorm<Eigen::Infinity>() < 1e-10)
      break;
  }
  return x;
}

Vector random_start(KernelFamily f, Rng& rng) {
  Vector x(kernel_param_count(f));
  switch (f) {
    case KernelFamily::ConstRBFPlusConstMatern:
      x << uniform(rng, -2, 2), uniform(rng, -3, 3), uniform(rng, -2, 2), uniform(rng, -3, 3);
      break;
    case KernelFamily::ConstRatQuad:
      x << uniform(rng, -2, 2), uniform(rng, -3, 3), uniform(rng, -3, 3);
      break;
    case KernelFamily::ConstExpSine:
      x << uniform(rng, -2, 2), uniform(rng, -3, 3), uniform(rng, -1, 3);
      break;
    default:
      x << uniform(rng, -2, 2), uniform(rng, -3, 3);
  }
  return x;
}

}  // namespace

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::ConstRBF: return "const*rbf";
    case KernelFamily::ConstMatern: return "const*matern";
    case KernelFamily::ConstRatQuad: return "const*ratquad";
    case KernelFamily::ConstExpSine: return "const*expsine";
    case KernelFamily::ConstRBFPlusConstMatern: return "const*rbf+const*matern";
  }
  return "?";
}

KernelFamily parse_kernel_family(std::string_view s) {
  for (auto f : kAllKernelFamilies)
    if (to_string(f) == s) return f;
  if (s == "rbf") return KernelFamily::ConstRBF;
  if (s == "matern") return KernelFamily::ConstMatern;
  if (s == "ratquad") return KernelFamily::ConstRatQuad;
  if (s == "expsine") return KernelFamily::ConstExpSine;
  if (s == "rbf+matern") return KernelFamily::ConstRBFPlusConstMatern;
  throw InvalidArgument("unknown kernel family: " + std::string(s));
}

std::size_t kernel_param_count(KernelFamily f) {
  switch (f) {
    case KernelFamily::ConstRBF:
    case KernelFamily::ConstMatern: return 2;
    case KernelFamily::ConstRatQuad:
    case KernelFamily::ConstExpSine: return 3;
    case KernelFamily::ConstRBFPlusConstMatern: return 4;
  }
  return 0;
}

double kernel_value(KernelFamily f, const Vector& lp, double d) { return KernelEval(f, lp).value(d); }

Vector kernel_gradient(KernelFamily f, const Vector& lp, double d) {
  double g[4];
  KernelEval(f, lp).gradient(d, g);
  return Eigen::Map<const Vector>(g, static_cast<Eigen::Index>(kernel_param_count(f)));
}

void kernel_bounds(KernelFamily f, Vector& lower, Vector& upper) {
  const auto np = static_cast<Eigen::Index>(kernel_param_count(f));
  const double lmax = std::log(1e5);
  lower = Vector::Constant(np, -lmax);
  upper = Vector::Constant(np, lmax);
  lower(0) = -5.0;
  upper(0) = 5.0;
  if (f == KernelFamily::ConstRBFPlusConstMatern) {
    lower(2) = -5.0;
    upper(2) = 5.0;
  }
}

Matrix pairwise_distances(const Matrix& a, const Matrix& b) {
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

double gpr_log_marginal_likelihood(KernelFamily f, const Vector& log_params, double noise,
                                   const Matrix& x, const Vector& y, Vector* grad) {
  if (static_cast<std::size_t>(log_params.size()) != kernel_param_count(f))
    throw InvalidArgument("gpr: wrong number of kernel parameters");
  if (x.rows() != y.size()) throw InvalidArgument("gpr: row/label mismatch");
  return lml_from_dist(f, log_params, noise, pairwise_distances(x, x), y, grad);
}

GprModel GprModel::with_hyperparameters(const Dataset& train, KernelFamily family,
                                        Vector log_params, double noise) {
  train.validate();
  if (!(noise >= 0.0)) throw InvalidArgument("gpr: noise must be >= 0");
  if (static_cast<std::size_t>(log_params.size()) != kernel_param_count(family))
    throw InvalidArgument("gpr: wrong number of kernel parameters");
  const Vector& y = train.labels();
  GprModel m;
  m.family_ = family;
  m.log_params_ = std::move(log_params);
  m.noise_ = noise;
  m.train_x_ = train.x;
  const Matrix dist = pairwise_distances(train.x, train.x);
  Matrix k = kernel_matrix(family, m.log_params_, dist);
  k.diagonal().array() += noise;
  const double scale = k.diagonal().mean();
  Eigen::LLT<Matrix> llt(k);
  double jitter = 0.0;
  for (double rel = 1e-10; llt.info() != Eigen::Success; rel *= 10.0) {
    if (rel > 1e-4) throw NumericalError("gpr: covariance not positive definite after jitter");
    jitter = rel * scale;
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
  }
  m.jitter_ = jitter;
  m.chol_ = llt.matrixL();
  m.alpha_ = llt.solve(y);
  const auto n = static_cast<double>(train.rows());
  m.lml_ = -0.5 * y.dot(m.alpha_) - m.chol_.diagonal().array().log().sum() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  return m;
}

PredictiveDistribution GprModel::predict(const Matrix& query) const {
  if (query.cols() != train_x_.cols()) throw InvalidArgument("gpr: query dimension mismatch");
  const Matrix ks = kernel_matrix(family_, log_params_, pairwise_distances(query, train_x_));
  Vector mean = ks * alpha_;
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
  const double prior = kernel_value(family_, log_params_, 0.0);
  Vector sd(query.rows());
  for (Eigen::Index i = 0; i < query.rows(); ++i)
    sd(i) = std::sqrt(std::max(0.0, prior - v.col(i).squaredNorm()));
  return PredictiveDistribution::gaussian(std::move(mean), std::move(sd));
}

GprModel fit_gpr(const Dataset& train, const std::vector<double>& noise_grid, std::uint64_t seed,
                 const std::vector<KernelFamily>& families) {
  train.validate();
  if (train.rows() < 2) throw InvalidArgument("fit_gpr: need at least 2 rows");
  if (noise_grid.empty()) throw InvalidArgument("fit_gpr: empty noise grid");
  if (families.empty()) throw InvalidArgument("fit_gpr: no kernel families");
  for (double s : noise_grid)
    if (!(s > 0.0)) throw InvalidArgument("fit_gpr: noise values must be > 0");
  const Vector& y = train.labels();
  const Matrix dist = pairwise_distances(train.x, train.x);

  std::vector<GprCandidate> candidates;
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    const KernelFamily f = families[fi];
    Vector lo, hi;
    kernel_bounds(f, lo, hi);
    for (std::size_t ni = 0; ni < noise_grid.size(); ++ni) {
      const Objective obj{f, noise_grid[ni], dist, y};
      Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(f) * 1000 + ni));
      double best = std::numeric_limits<double>::infinity();
      Vector best_x;
      for (int start = 0; start <= 5; ++start) {
        Vector x0 = start == 0 ? Vector::Zero(kernel_param_count(f)) : random_start(f, rng);
        double fx = 0.0;
        Vector x = minimize_box(obj, x0, lo, hi, fx);
        if (fx < best) {
          best = fx;
          best_x = x;
        }
      }
      if (std::isfinite(best)) candidates.push_back({f, noise_grid[ni], best_x, -best});
    }
  }
  if (candidates.empty()) throw NumericalError("fit_gpr: no feasible hyperparameters");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].lml > candidates[arg].lml) arg = i;
  GprModel m = GprModel::with_hyperparameters(train, candidates[arg].family,
                                              candidates[arg].log_params, candidates[arg].noise);
  m.candidates_ = std::move(candidates);
  return m;
}

FittedPtr GprPredictor::fit(const Dataset& train) const {
  return std::make_shared<GprModel>(fit_gpr(train, noise_grid_, seed_));
}

}  // namespace workbench
