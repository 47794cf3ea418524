#include "workbench/mestim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "json.hpp"
#include "workbench/error.hpp"
#include "workbench/parallel.hpp"
#include "workbench/random.hpp"

namespace workbench {

namespace {

constexpr double kLogisticTol = 1e-10;
constexpr std::size_t kLogisticMaxIter = 200;
constexpr double kSeparationNorm = 1e6;

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double check_loss(double r, double tau) { return r * (tau - (r < 0.0 ? 1.0 : 0.0)); }

void check_inputs(const WorkingModel& model, const Matrix& x, const Vector& y) {
  model.validate();
  if (x.rows() != y.size()) throw InvalidArgument("erm: row/label mismatch");
  if (x.rows() <= x.cols() + 1) throw InvalidArgument("erm: need n > p + 1");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("erm: non-finite input");
  if (model.kind == WorkingModelKind::LogisticReg && ((y.array() < 0.0).any() || (y.array() > 1.0).any()))
    throw InvalidArgument("erm: logistic labels must lie in [0, 1]");
}

ThetaEstimate solve_linear(const Matrix& xb, const Vector& y) {
  Eigen::ColPivHouseholderQR<Matrix> qr(xb);
  if (qr.rank() < xb.cols()) throw InvalidArgument("erm: design matrix is rank deficient");
  ThetaEstimate est;
  est.theta = qr.solve(y);
  const Vector r = y - xb * est.theta;
  est.objective = 0.5 * r.squaredNorm();
  est.grad_norm = (xb.transpose() * r).lpNorm<Eigen::Infinity>() / static_cast<double>(xb.rows());
  est.iterations = 1;
  est.method = "qr";
  return est;
}

double logistic_objective(const Matrix& xb, const Vector& y, const Vector& theta) {
  const Vector u = xb * theta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += softplus(u(i)) - y(i) * u(i);
  return s;
}

ThetaEstimate solve_logistic(const Matrix& xb, const Vector& y) {
  const auto n = xb.rows();
  const auto q = xb.cols();
  const double nd = static_cast<double>(n);
  Vector theta = Vector::Zero(q);
  double obj = logistic_objective(xb, y, theta);
  ThetaEstimate est;
  est.method = "damped-newton";
  for (std::size_t it = 0; it <= kLogisticMaxIter; ++it) {
    const Vector u = xb * theta;
    Vector p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(u(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Vector g = xb.transpose() * (p - y);
    const double gn = g.lpNorm<Eigen::Infinity>() / nd;
    est.iterations = it;
    est.grad_norm = gn;
    if (gn <= kLogisticTol) break;
    if (it == kLogisticMaxIter) throw NotConverged("logistic erm", it, gn);
    Matrix h = xb.transpose() * (xb.array().colwise() * w.array()).matrix();
    Eigen::LDLT<Matrix> ldlt(h);
    Vector d;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) d = -ldlt.solve(g);
    if (d.size() != q || !d.allFinite() || g.dot(d) >= 0.0) {
      h.diagonal().array() += 1e-10 * (h.diagonal().maxCoeff() + 1e-300);
      d = -h.ldlt().solve(g);
    }
    if (!d.allFinite() || g.dot(d) >= 0.0) d = -g;
    double t = 1.0;
    Vector cand;
    double cobj = 0.0;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      cand = theta + t * d;
      cobj = logistic_objective(xb, y, cand);
      if (cobj <= obj + 1e-4 * t * g.dot(d)) {
        ok = true;
        break;
      }
      // Near the optimum the objective no longer resolves the decrease; fall
      // back to requiring a smaller gradient.
      if (std::abs(cobj - obj) <= 1e-13 * (1.0 + std::abs(obj))) {
        Vector pc(n);
        const Vector uc = xb * cand;
        for (Eigen::Index i = 0; i < n; ++i) pc(i) = sigmoid(uc(i));
        if ((xb.transpose() * (pc - y)).lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()) {
          ok = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!ok) {
      // Rounding floor: nothing left to gain along d.
      if (gn <= 1e2 * kLogisticTol) break;
      throw NotConverged("logistic erm: line search failed", it, gn);
    }
    theta = cand;
    obj = cobj;
    if (theta.norm() > kSeparationNorm)
      throw SeparationError("logistic erm: parameters diverge (||theta|| > 1e6); classes are separable");
  }
  // A converged fit that classifies every hard label with a positive margin
  // means the data are separable and no finite minimizer exists.
  const Vector u = xb * theta;
  bool hard = true, separated = true;
  for (Eigen::Index i = 0; i < n && hard; ++i) {
    hard = y(i) == 0.0 || y(i) == 1.0;
    separated = separated && (y(i) == 1.0 ? u(i) > 0.0 : u(i) < 0.0);
  }
  if (hard && separated)
    throw SeparationError("logistic erm: classes are completely separated; no finite minimizer");
  est.theta = theta;
  est.objective = obj;
  return est;
}

// ---------------------------------------------------------------------------
// Quantile regression: smoothed-pinball Newton continuation followed by exact
// simplex steps on the vertex solution.

double smoothed_pinball(const Vector& r, double tau, double eps) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double a = std::abs(r(i));
    s += (a <= eps ? r(i) * r(i) / (4.0 * eps) + eps / 4.0 : 0.5 * a) + (tau - 0.5) * r(i);
  }
  return s;
}

Vector smoothed_stage(const Matrix& xb, const Vector& y, double tau, double eps, Vector theta,
                      std::size_t& iters) {
  const auto n = xb.rows();
  const double base = (xb.array().square().colwise().sum()).maxCoeff() / static_cast<double>(n);
  for (int it = 0; it < 100; ++it) {
    ++iters;
    const Vector r = y - xb * theta;
    Vector psi(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      psi(i) = 0.5 * std::clamp(r(i) / eps, -1.0, 1.0) + (tau - 0.5);
      w(i) = std::abs(r(i)) < eps ? 0.5 / eps : 0.0;
    }
    const Vector g = -xb.transpose() * psi;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-13 * static_cast<double>(n)) break;
    Matrix h = xb.transpose() * (xb.array().colwise() * w.array()).matrix();
    h.diagonal().array() += 1e-10 * base / eps + 1e-12;
    const Vector d = -h.ldlt().solve(g);
    if (!d.allFinite()) break;
    const double f0 = smoothed_pinball(r, tau, eps);
    double t = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 80; ++ls) {
      const Vector cand = theta + t * d;
      const double f = smoothed_pinball(y - xb * cand, tau, eps);
      if (f <= f0 + 1e-4 * t * g.dot(d)) {
        ok = f < f0 || t == 1.0;
        if (ok) theta = cand;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
  }
  return theta;
}

struct Vertex {
  std::vector<Eigen::Index> basis;
  Vector theta;
  Vector v;  // basis multipliers
  bool optimal = false;
  double subgrad = 0.0;
};

// Solves the interpolation on `basis` and the multiplier system.
bool evaluate_vertex(const Matrix& xb, const Vector& y, double tau, Vertex& vx) {
  const auto q = xb.cols();
  Matrix xB(q, q);
  Vector yB(q);
  std::vector<char> in(static_cast<std::size_t>(xb.rows()), 0);
  for (Eigen::Index k = 0; k < q; ++k) {
    xB.row(k) = xb.row(vx.basis[static_cast<std::size_t>(k)]);
    yB(k) = y(vx.basis[static_cast<std::size_t>(k)]);
    in[static_cast<std::size_t>(vx.basis[static_cast<std::size_t>(k)])] = 1;
  }
  Eigen::FullPivLU<Matrix> lu(xB);
  if (!lu.isInvertible()) return false;
  vx.theta = lu.solve(yB);
  const Vector r = y - xb * vx.theta;
  Vector rhs = Vector::Zero(q);
  for (Eigen::Index i = 0; i < xb.rows(); ++i) {
    if (in[static_cast<std::size_t>(i)]) continue;
    const double psi = r(i) < 0.0 ? tau - 1.0 : tau;
    rhs -= psi * xb.row(i).transpose();
  }
  vx.v = xB.transpose().fullPivLu().solve(rhs);
  const double slack = 1e-10;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < q; ++k)
    worst = std::max({worst, (tau - 1.0) - vx.v(k), vx.v(k) - tau});
  vx.optimal = worst <= slack;
  const Vector clipped = vx.v.cwiseMax(tau - 1.0).cwiseMin(tau);
  vx.subgrad = (xB.transpose() * (clipped - vx.v)).lpNorm<Eigen::Infinity>();
  return true;
}

// One exact simplex step away from a non-optimal vertex. Returns false when
// no improving step exists.
bool simplex_step(const Matrix& xb, const Vector& y, double tau, Vertex& vx) {
  const auto q = xb.cols();
  Eigen::Index leave = -1;
  double s = 0.0, most = 1e-10;
  for (Eigen::Index k = 0; k < q; ++k) {
    if ((tau - 1.0) - vx.v(k) > most) { most = (tau - 1.0) - vx.v(k); leave = k; s = 1.0; }
    if (vx.v(k) - tau > most) { most = vx.v(k) - tau; leave = k; s = -1.0; }
  }
  if (leave < 0) return false;
  Matrix xB(q, q);
  std::vector<char> in(static_cast<std::size_t>(xb.rows()), 0);
  for (Eigen::Index k = 0; k < q; ++k) {
    xB.row(k) = xb.row(vx.basis[static_cast<std::size_t>(k)]);
    in[static_cast<std::size_t>(vx.basis[static_cast<std::size_t>(k)])] = 1;
  }
  Vector e = Vector::Zero(q);
  e(leave) = s;
  const Vector d = xB.fullPivLu().solve(e);
  const Vector a = xb * d;
  const Vector r = y - xb * vx.theta;
  double slope = s > 0.0 ? s * vx.v(leave) + (1.0 - tau) : s * vx.v(leave) + tau;
  std::vector<std::pair<double, Eigen::Index>> bp;
  for (Eigen::Index i = 0; i < xb.rows(); ++i) {
    if (in[static_cast<std::size_t>(i)] || a(i) == 0.0) continue;
    const double t = r(i) / a(i);
    if (t >= 0.0) bp.emplace_back(t, i);
  }
  std::sort(bp.begin(), bp.end());
  for (const auto& [t, i] : bp) {
    slope += std::abs(a(i));
    if (slope >= 0.0) {
      vx.basis[static_cast<std::size_t>(leave)] = i;
      return true;
    }
  }
  return false;
}

ThetaEstimate solve_quantile(const Matrix& xb, const Vector& y_orig, double tau) {
  const auto n = xb.rows();
  const auto q = xb.cols();
  // Tiny deterministic label jitter breaks ties (tied labels make the LP
  // degenerate and the simplex steps cycle). The final vertex is re-solved on
  // the original labels; zero residuals there may take any subgradient, so the
  // certificate computed with the jittered signs stays valid.
  Vector y = y_orig;
  {
    Rng rng = make_rng(0x5eedULL + static_cast<std::uint64_t>(n));
    const double scale = 1e-11 * (1.0 + y_orig.lpNorm<Eigen::Infinity>());
    for (Eigen::Index i = 0; i < n; ++i) y(i) += scale * uniform01(rng);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(xb);
  if (qr.rank() < q) throw InvalidArgument("erm: design matrix is rank deficient");
  Vector theta = qr.solve(y);
  std::size_t iters = 0;

  // Warm-up stages above 1e-2 track the residual scale.
  const Vector r0 = (y - xb * theta).cwiseAbs();
  std::vector<double> sorted(r0.data(), r0.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  double eps = 1e-2;
  while (eps * 10.0 < sorted[static_cast<std::size_t>(n / 2)]) eps *= 10.0;
  for (; eps >= 1e-8 * 0.999; eps /= 10.0) theta = smoothed_stage(xb, y, tau, eps, theta, iters);

  // Vertex from the q smallest residuals, then exact simplex steps.
  const Vector r = y - xb * theta;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(r(a)) < std::abs(r(b));
  });
  Vertex vx;
  // Greedily pick well-conditioned basis rows in residual order.
  {
    Matrix acc(0, q);
    for (Eigen::Index i : idx) {
      Matrix trial(acc.rows() + 1, q);
      trial << acc, xb.row(i);
      Eigen::FullPivLU<Matrix> lu(trial);
      lu.setThreshold(1e-10);
      if (lu.rank() == trial.rows()) {
        acc = trial;
        vx.basis.push_back(i);
        if (static_cast<Eigen::Index>(vx.basis.size()) == q) break;
      }
    }
  }
  auto objective_at = [&](const Vector& th) {
    const Vector rr = y_orig - xb * th;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += check_loss(rr(i), tau);
    return s;
  };
  const double smooth_obj = objective_at(theta);
  ThetaEstimate est;
  est.method = "smoothed-pinball+simplex";
  bool have_vertex = static_cast<Eigen::Index>(vx.basis.size()) == q && evaluate_vertex(xb, y, tau, vx);
  std::size_t steps = 0;
  while (have_vertex && !vx.optimal && steps < static_cast<std::size_t>(20 * n)) {
    Vertex next = vx;
    if (!simplex_step(xb, y, tau, next) || !evaluate_vertex(xb, y, tau, next)) break;
    vx = std::move(next);
    ++steps;
  }
  iters += steps;
  if (have_vertex) {
    Matrix xB(q, q);
    Vector yB(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      xB.row(k) = xb.row(vx.basis[static_cast<std::size_t>(k)]);
      yB(k) = y_orig(vx.basis[static_cast<std::size_t>(k)]);
    }
    const Vector th = xB.fullPivLu().solve(yB);
    const double obj = objective_at(th);
    if (obj <= smooth_obj + 1e-12 * (1.0 + std::abs(smooth_obj))) {
      est.theta = th;
      est.objective = obj;
      est.grad_norm = vx.subgrad / static_cast<double>(n);
      est.iterations = iters;
      if (!vx.optimal)
        throw NotConverged("quantile erm: optimality certificate failed", iters, est.grad_norm);
      return est;
    }
  }
  throw NotConverged("quantile erm: no optimal vertex found", iters,
                     (xb.transpose() * Vector::Ones(n)).lpNorm<Eigen::Infinity>());
}

Vector clip01(Vector v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

void WorkingModel::validate() const {
  if (kind == WorkingModelKind::QuantileReg && !(tau > 0.0 && tau < 1.0))
    throw InvalidArgument("quantile working model needs tau in (0, 1)");
}

WorkingModel WorkingModel::for_setting(SemiSupSetting s, double tau) {
  switch (s) {
    case SemiSupSetting::Linear: return linear();
    case SemiSupSetting::Logistic: return logistic();
    case SemiSupSetting::Quantile: return quantile(tau);
  }
  return linear();
}

std::string to_string(WorkingModelKind k) {
  switch (k) {
    case WorkingModelKind::LinearReg: return "linear";
    case WorkingModelKind::LogisticReg: return "logistic";
    case WorkingModelKind::QuantileReg: return "quantile";
  }
  return "?";
}

std::string ThetaEstimate::to_json() const {
  nlohmann::json j;
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  j["objective"] = objective;
  j["grad_norm"] = grad_norm;
  j["iterations"] = iterations;
  j["method"] = method;
  return j.dump();
}

Matrix augment_intercept(const Matrix& x) {
  Matrix xb(x.rows(), x.cols() + 1);
  xb.col(0).setOnes();
  xb.rightCols(x.cols()) = x;
  return xb;
}

double erm_objective(const WorkingModel& model, const Matrix& x, const Vector& y, const Vector& theta) {
  const Matrix xb = augment_intercept(x);
  if (theta.size() != xb.cols()) throw InvalidArgument("erm_objective: theta length mismatch");
  switch (model.kind) {
    case WorkingModelKind::LinearReg: return 0.5 * (y - xb * theta).squaredNorm();
    case WorkingModelKind::LogisticReg: return logistic_objective(xb, y, theta);
    case WorkingModelKind::QuantileReg: {
      const Vector r = y - xb * theta;
      double s = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) s += check_loss(r(i), model.tau);
      return s;
    }
  }
  return 0.0;
}

Vector erm_gradient(const WorkingModel& model, const Matrix& x, const Vector& y, const Vector& theta) {
  const Matrix xb = augment_intercept(x);
  if (theta.size() != xb.cols()) throw InvalidArgument("erm_gradient: theta length mismatch");
  const Vector u = xb * theta;
  Vector psi(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    switch (model.kind) {
      case WorkingModelKind::LinearReg: psi(i) = u(i) - y(i); break;
      case WorkingModelKind::LogisticReg: psi(i) = sigmoid(u(i)) - y(i); break;
      case WorkingModelKind::QuantileReg: psi(i) = -(y(i) - u(i) < 0.0 ? model.tau - 1.0 : model.tau); break;
    }
  }
  return xb.transpose() * psi;
}

ThetaEstimate erm(const WorkingModel& model, const Matrix& x, const Vector& y) {
  check_inputs(model, x, y);
  const Matrix xb = augment_intercept(x);
  switch (model.kind) {
    case WorkingModelKind::LinearReg: return solve_linear(xb, y);
    case WorkingModelKind::LogisticReg: return solve_logistic(xb, y);
    case WorkingModelKind::QuantileReg: return solve_quantile(xb, y, model.tau);
  }
  throw InvalidArgument("erm: unknown working model");
}

ThetaEstimate erm(const WorkingModel& model, const Dataset& data) {
  return erm(model, data.x, data.labels());
}

std::string to_string(SemisupStrategy s) {
  switch (s) {
    case SemisupStrategy::Vanilla: return "vanilla";
    case SemisupStrategy::ImputeI: return "impute-i";
    case SemisupStrategy::DebiasD: return "debias-d";
    case SemisupStrategy::PPIOriginal: return "ppi";
  }
  return "?";
}

SemisupStrategy parse_semisup_strategy(std::string_view s) {
  if (s == "vanilla") return SemisupStrategy::Vanilla;
  if (s == "impute-i" || s == "impute") return SemisupStrategy::ImputeI;
  if (s == "debias-d" || s == "debias") return SemisupStrategy::DebiasD;
  if (s == "ppi" || s == "ppi-original") return SemisupStrategy::PPIOriginal;
  throw InvalidArgument("unknown semi-supervised strategy: " + std::string(s));
}

SemisupDetail semisup_estimate_detail(SemisupStrategy strategy, const WorkingModel& model,
                                      const Predictor* imputer, const Dataset& labeled,
                                      const Dataset& unlabeled) {
  labeled.validate();
  if (!labeled.labeled()) throw InvalidArgument("semisup_estimate: labeled set has no labels");
  SemisupDetail out;
  if (strategy == SemisupStrategy::Vanilla) {
    out.result = erm(model, labeled);
    out.result.method = to_string(strategy) + "/" + out.result.method;
    return out;
  }
  if (!imputer) throw InvalidArgument("semisup_estimate: strategy requires an imputer");
  if (unlabeled.rows() == 0) throw InvalidArgument("semisup_estimate: empty unlabeled set");
  if (unlabeled.cols() != labeled.cols()) throw InvalidArgument("semisup_estimate: column mismatch");

  const FittedPtr fitted = imputer->fit(labeled);
  out.imputed_labeled = fitted->predict_mean(labeled.x);
  out.imputed_unlabeled = fitted->predict_mean(unlabeled.x);
  if (model.kind == WorkingModelKind::LogisticReg) {
    out.imputed_labeled = clip01(out.imputed_labeled);
    out.imputed_unlabeled = clip01(out.imputed_unlabeled);
  }
  const Dataset hat_l(labeled.x, out.imputed_labeled);
  const Dataset hat_u(unlabeled.x, out.imputed_unlabeled);

  if (strategy == SemisupStrategy::ImputeI || strategy == SemisupStrategy::DebiasD) {
    out.pooled_fit = erm(model, concat(hat_l, hat_u));
  }
  if (strategy == SemisupStrategy::PPIOriginal) out.unlabeled_fit = erm(model, hat_u);
  if (strategy != SemisupStrategy::ImputeI) {
    out.labeled_fit = erm(model, labeled);
    out.imputed_labeled_fit = erm(model, hat_l);
    out.delta = out.imputed_labeled_fit->theta - out.labeled_fit->theta;
  }

  const ThetaEstimate& main = strategy == SemisupStrategy::PPIOriginal ? *out.unlabeled_fit : *out.pooled_fit;
  out.result = main;
  if (out.delta) {
    out.result.theta = main.theta - *out.delta;
    out.result.grad_norm = std::max({main.grad_norm, out.labeled_fit->grad_norm, out.imputed_labeled_fit->grad_norm});
    out.result.iterations = main.iterations + out.labeled_fit->iterations + out.imputed_labeled_fit->iterations;
    out.result.objective = std::numeric_limits<double>::quiet_NaN();
  }
  out.result.method = to_string(strategy) + "/" + main.method;
  if (std::isnan(out.result.objective)) {
    // A debiased theta is not the minimizer of any single objective; report
    // the pooled objective at the returned point instead.
    const Dataset& pool = strategy == SemisupStrategy::PPIOriginal ? hat_u : hat_l;
    out.result.objective = strategy == SemisupStrategy::PPIOriginal
                               ? erm_objective(model, pool.x, pool.labels(), out.result.theta)
                               : erm_objective(model, concat(hat_l, hat_u).x, concat(hat_l, hat_u).labels(),
                                               out.result.theta);
  }
  return out;
}

ThetaEstimate semisup_estimate(SemisupStrategy strategy, const WorkingModel& model,
                               const Predictor* imputer, const Dataset& labeled,
                               const Dataset& unlabeled) {
  return semisup_estimate_detail(strategy, model, imputer, labeled, unlabeled).result;
}

McTruth mc_truth(SemiSupSetting setting, std::size_t p, std::optional<double> tau, std::size_t n_mc,
                 std::uint64_t seed, unsigned workers) {
  if (p < 1) throw InvalidArgument("mc_truth: p must be >= 1");
  if (n_mc < 10000) throw InvalidArgument("mc_truth: n_mc must be >= 10^4");
  if (setting == SemiSupSetting::Quantile && !tau) throw InvalidArgument("mc_truth: quantile needs tau");
  McTruth out;
  if (setting == SemiSupSetting::Quantile && n_mc > kQuantileMcCap) {
    out.note = "quantile n_mc capped at " + std::to_string(kQuantileMcCap) + " (requested " +
               std::to_string(n_mc) + ")";
    n_mc = kQuantileMcCap;
  }
  out.samples = n_mc;
  constexpr std::size_t kBatch = 100000;
  const std::size_t batches = (n_mc + kBatch - 1) / kBatch;
  auto batch = [&](std::size_t b) {
    const std::size_t size = std::min(kBatch, n_mc - b * kBatch);
    Rng rng = make_rng(derive_seed(seed, b));
    return sample_semisup(setting, p, size, rng);
  };
  const auto q = static_cast<Eigen::Index>(p + 1);

  if (setting == SemiSupSetting::Linear) {
    std::vector<Matrix> gram(batches);
    std::vector<Vector> rhs(batches);
    parallel_for(batches, workers, [&](std::size_t b) {
      const Dataset d = batch(b);
      const Matrix xb = augment_intercept(d.x);
      gram[b] = xb.transpose() * xb;
      rhs[b] = xb.transpose() * d.labels();
    });
    Matrix g = Matrix::Zero(q, q);
    Vector r = Vector::Zero(q);
    for (std::size_t b = 0; b < batches; ++b) {
      g += gram[b];
      r += rhs[b];
    }
    out.theta = g.ldlt().solve(r);
    return out;
  }

  if (setting == SemiSupSetting::Logistic) {
    Vector theta = Vector::Zero(q);
    // Sampled once; every Newton and line-search pass reuses the same rows.
    std::vector<Matrix> xs(batches);
    std::vector<Vector> ys(batches);
    parallel_for(batches, workers, [&](std::size_t b) {
      const Dataset d = batch(b);
      xs[b] = augment_intercept(d.x);
      ys[b] = *d.y;
    });
    struct Part { Vector g; Matrix h; double obj = 0.0; };
    auto pass = [&](const Vector& th, bool with_hessian) {
      std::vector<Part> parts(batches);
      parallel_for(batches, workers, [&](std::size_t b) {
        const Matrix& xb = xs[b];
        const Vector& yb = ys[b];
        const Vector u = xb * th;
        Vector res(u.size()), w(u.size());
        double obj = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          const double pr = sigmoid(u(i));
          res(i) = pr - yb(i);
          w(i) = pr * (1.0 - pr);
          obj += softplus(u(i)) - yb(i) * u(i);
        }
        parts[b].obj = obj;
        parts[b].g = xb.transpose() * res;
        if (with_hessian) parts[b].h = xb.transpose() * (xb.array().colwise() * w.array()).matrix();
      });
      Part total{Vector::Zero(q), Matrix::Zero(q, q), 0.0};
      for (const auto& pt : parts) {
        total.obj += pt.obj;
        total.g += pt.g;
        if (with_hessian) total.h += pt.h;
      }
      return total;
    };
    const double nd = static_cast<double>(n_mc);
    Part cur = pass(theta, true);
    for (std::size_t it = 0;; ++it) {
      const double gn = cur.g.lpNorm<Eigen::Infinity>() / nd;
      if (gn <= kLogisticTol) break;
      if (it >= kLogisticMaxIter) throw NotConverged("mc_truth logistic", it, gn);
      const Vector d = -cur.h.ldlt().solve(cur.g);
      double t = 1.0;
      bool ok = false;
      Part trial;
      for (int ls = 0; ls < 40; ++ls) {
        trial = pass(theta + t * d, true);
        // At 1e6 rows the objective stops resolving the Armijo decrease
        // before the gradient reaches tolerance; a halved gradient also counts.
        if (trial.obj <= cur.obj + 1e-4 * t * cur.g.dot(d) ||
            trial.g.lpNorm<Eigen::Infinity>() / nd <= 0.5 * gn) {
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) {
        if (gn <= 1e2 * kLogisticTol) break;
        throw NotConverged("mc_truth logistic: line search failed", it, gn);
      }
      theta += t * d;
      cur = std::move(trial);
    }
    out.theta = theta;
    return out;
  }

  std::vector<Dataset> parts(batches);
  parallel_for(batches, workers, [&](std::size_t b) { parts[b] = batch(b); });
  Matrix x(static_cast<Eigen::Index>(n_mc), static_cast<Eigen::Index>(p));
  Vector y(static_cast<Eigen::Index>(n_mc));
  Eigen::Index at = 0;
  for (const auto& d : parts) {
    x.middleRows(at, d.x.rows()) = d.x;
    y.segment(at, d.x.rows()) = *d.y;
    at += d.x.rows();
  }
  out.theta = erm(WorkingModel::quantile(*tau), x, y).theta;
  return out;
}

namespace {

class LogisticModel final : public FittedModel {
 public:
  explicit LogisticModel(Vector theta) : theta_(std::move(theta)) {}
  PredictiveDistribution predict(const Matrix& query) const override {
    const Vector u = augment_intercept(query) * theta_;
    Vector p(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) p(i) = sigmoid(u(i));
    return PredictiveDistribution::point(std::move(p));
  }

 private:
  Vector theta_;
};

}  // namespace

FittedPtr LogisticPropensity::fit(const Dataset& train) const {
  return std::make_shared<LogisticModel>(erm(WorkingModel::logistic(), train).theta);
}

}  // namespace workbench
