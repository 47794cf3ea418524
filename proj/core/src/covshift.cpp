#include "workbench/covshift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "workbench/error.hpp"
#include "workbench/random.hpp"

namespace workbench {

namespace {

double mse(const Vector& a, const Vector& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

// Smallest score; ties go to the smaller lambda.
std::size_t argmin_score(const std::vector<double>& scores, const std::vector<double>& grid) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best] || (scores[i] == scores[best] && grid[i] < grid[best])) best = i;
  }
  return best;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidArgument("lambda grid is empty");
  for (double l : grid)
    if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda grid values must be positive and finite");
}

struct CvResult {
  std::size_t best;
  std::vector<double> mse;
};

CvResult krr_cv(const Dataset& d, const KernelSpec& kernel, const std::vector<double>& grid, std::uint64_t seed) {
  const std::size_t n = d.rows();
  const std::size_t folds = std::min<std::size_t>(5, n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed);
  shuffle(perm, rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  std::vector<double> sse(grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
    const Dataset train = d.subset(tr), test = d.subset(te);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const Vector pred = fit_krr(train, kernel, grid[g]).predict_mean(test.x);
      sse[g] += (pred - test.labels()).squaredNorm();
    }
  }
  for (double& s : sse) s /= static_cast<double>(n);
  return {argmin_score(sse, grid), sse};
}

Vector true_means(const CovShiftBundle& b, const Matrix& x) {
  Vector v(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) v(i) = b.true_mean(x(i, 0));
  return v;
}

// Shared pipeline; `oracle` swaps the imputed aux labels for true means.
PlSelection select(const CovShiftBundle& b, const std::vector<double>& grid, KernelSpec kernel,
                   std::uint64_t seed, const Predictor* imputer, bool oracle) {
  check_grid(grid);
  const std::size_t n = b.source.rows();
  if (n < 4) throw InvalidArgument("pl_select: source needs at least 4 rows");
  if (b.target_aux.rows() == 0) throw InvalidArgument("pl_select: empty aux set");
  if (kernel.type == KernelSpec::Type::Rbf && kernel.lengthscale <= 0.0) {
    kernel.lengthscale = median_heuristic(b.source.x);
    if (!(kernel.lengthscale > 0.0)) throw NumericalError("pl_select: degenerate source covariates");
  }

  PlSelection s;
  s.lambda_grid = grid;
  s.kernel = kernel;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(derive_seed(seed, 0));
  shuffle(perm, rng);
  s.half1.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n / 2));
  s.half2.assign(perm.begin() + static_cast<std::ptrdiff_t>(n / 2), perm.end());
  std::sort(s.half1.begin(), s.half1.end());
  std::sort(s.half2.begin(), s.half2.end());
  const Dataset d1 = b.source.subset(s.half1), d2 = b.source.subset(s.half2);

  const Vector truth = true_means(b, b.target_aux.x);
  if (oracle) {
    s.imputed_aux = truth;
  } else {
    if (imputer) {
      s.imputer = imputer->fit(d1);
    } else {
      auto cv = krr_cv(d1, kernel, grid, derive_seed(seed, 1));
      s.imputer_lambda = grid[cv.best];
      s.imputer_cv_mse = std::move(cv.mse);
      s.imputer = std::make_shared<KrrModel>(fit_krr(d1, kernel, s.imputer_lambda));
    }
    s.imputed_aux = s.imputer->predict_mean(b.target_aux.x);
  }

  s.candidates.reserve(grid.size());
  for (double lambda : grid) {
    s.candidates.push_back(fit_krr(d2, kernel, lambda));
    const Vector pred = s.candidates.back().predict_mean(b.target_aux.x);
    s.selection_scores.push_back(mse(pred, s.imputed_aux));
    s.true_aux_risk.push_back(mse(pred, truth));
  }
  s.chosen_index = argmin_score(s.selection_scores, grid);
  return s;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo) || n == 0) throw InvalidArgument("log_grid: need 0 < lo <= hi and n >= 1");
  if (n == 1) return {lo};
  std::vector<double> g(n);
  const double a = std::log10(lo), step = (std::log10(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, a + step * static_cast<double>(i));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-6, 1e2, 20); }

PlSelection pl_select(const CovShiftBundle& bundle, const std::vector<double>& lambda_grid, KernelSpec kernel,
                      std::uint64_t seed, const Predictor* imputer) {
  return select(bundle, lambda_grid, kernel, seed, imputer, false);
}

PlSelection wang_oracle_select(const CovShiftBundle& bundle, const std::vector<double>& lambda_grid,
                               KernelSpec kernel, std::uint64_t seed) {
  return select(bundle, lambda_grid, kernel, seed, nullptr, true);
}

Vector importance_weights(const CovShiftBundle& bundle) {
  Vector w(bundle.source.x.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = bundle.true_density_ratio(bundle.source.x(i, 0));
  return w;
}

std::shared_ptr<const GbrtModel> naive_fit(const CovShiftBundle& bundle, std::uint64_t seed, const GbrtGrid& grid) {
  return std::make_shared<GbrtModel>(fit_gbrt(bundle.source, std::nullopt, grid, 5, seed));
}

std::shared_ptr<const GbrtModel> iw_fit(const CovShiftBundle& bundle, std::uint64_t seed, const GbrtGrid& grid) {
  return std::make_shared<GbrtModel>(fit_gbrt(bundle.source, importance_weights(bundle), grid, 5, seed));
}

double covshift_mse(const FittedModel& model, const CovShiftBundle& bundle) {
  if (bundle.target_test.rows() == 0) throw InvalidArgument("covshift_mse: empty target test set");
  return mse(model.predict_mean(bundle.target_test.x), bundle.target_test.labels());
}

void write_selection_csv(std::ostream& out, const PlSelection& sel) {
  out << "lambda,selection_score,true_risk\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < sel.lambda_grid.size(); ++i)
    out << sel.lambda_grid[i] << ',' << sel.selection_scores[i] << ',' << sel.true_aux_risk[i] << '\n';
  out.precision(old);
}

}  // namespace workbench
