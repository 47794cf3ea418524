#include "workbench/gbrt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "workbench/error.hpp"
#include "workbench/random.hpp"

namespace workbench {

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const Node& nd = nodes[static_cast<std::size_t>(at)];
    at = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

namespace {

std::vector<std::vector<Eigen::Index>> presort(const Matrix& x) {
  std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto& o = order[static_cast<std::size_t>(j)];
    o.resize(static_cast<std::size_t>(x.rows()));
    std::iota(o.begin(), o.end(), Eigen::Index{0});
    std::stable_sort(o.begin(), o.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a, j) < x(b, j); });
  }
  return order;
}

RegressionTree grow(const Matrix& x, const Vector& r, const Vector& w, std::size_t depth,
                    const std::vector<std::vector<Eigen::Index>>& order) {
  const auto n = x.rows();
  RegressionTree tree;
  std::vector<int> node_of(static_cast<std::size_t>(n), 0);
  struct Stat { double s = 0.0, w = 0.0; };
  std::vector<Stat> stat(1);
  for (Eigen::Index i = 0; i < n; ++i) {
    stat[0].s += w(i) * r(i);
    stat[0].w += w(i);
  }
  tree.nodes.push_back({});
  std::vector<int> frontier{0};

  for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
    const std::size_t nn = tree.nodes.size();
    struct Best { double gain = 0.0; int feature = -1; double threshold = 0.0; };
    std::vector<Best> best(nn);
    std::vector<char> active(nn, 0);
    for (int f : frontier) active[static_cast<std::size_t>(f)] = 1;
    std::vector<Stat> left(nn);
    std::vector<double> last(nn);
    std::vector<char> seen(nn);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      std::fill(left.begin(), left.end(), Stat{});
      std::fill(seen.begin(), seen.end(), 0);
      for (Eigen::Index i : order[static_cast<std::size_t>(j)]) {
        const auto nd = static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)]);
        if (!active[nd]) continue;
        const double v = x(i, j);
        if (seen[nd] && v > last[nd]) {
          const Stat& L = left[nd];
          const Stat& T = stat[nd];
          const double sr = T.s - L.s, wr = T.w - L.w;
          const double gain = L.s * L.s / L.w + sr * sr / wr - T.s * T.s / T.w;
          if (gain > best[nd].gain) best[nd] = {gain, static_cast<int>(j), 0.5 * (last[nd] + v)};
        }
        left[nd].s += w(i) * r(i);
        left[nd].w += w(i);
        last[nd] = v;
        seen[nd] = 1;
      }
    }
    std::vector<int> next;
    for (int f : frontier) {
      const Best b = best[static_cast<std::size_t>(f)];
      if (b.feature < 0) continue;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stat.resize(tree.nodes.size());
      auto& parent = tree.nodes[static_cast<std::size_t>(f)];
      parent.feature = b.feature;
      parent.threshold = b.threshold;
      parent.left = l;
      parent.right = l + 1;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& nd = node_of[static_cast<std::size_t>(i)];
      const auto& p = tree.nodes[static_cast<std::size_t>(nd)];
      if (p.feature < 0) continue;
      nd = x(i, p.feature) <= p.threshold ? p.left : p.right;
      stat[static_cast<std::size_t>(nd)].s += w(i) * r(i);
      stat[static_cast<std::size_t>(nd)].w += w(i);
    }
    frontier = std::move(next);
  }
  for (std::size_t k = 0; k < tree.nodes.size(); ++k)
    if (tree.nodes[k].feature < 0) tree.nodes[k].value = stat[k].w > 0.0 ? stat[k].s / stat[k].w : 0.0;
  return tree;
}

Vector check_weights(const Dataset& train, const std::optional<Vector>& weights) {
  const auto n = static_cast<Eigen::Index>(train.rows());
  if (!weights) return Vector::Ones(n);
  if (weights->size() != n) throw InvalidArgument("gbrt: weight length mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!((*weights)(i) > 0.0) || !std::isfinite((*weights)(i)))
      throw InvalidArgument("gbrt: weights must be positive and finite");
  return *weights;
}

GbrtModel boost(const Matrix& x, const Vector& y, const Vector& w, const GbrtParams& params) {
  if (params.depth < 1) throw InvalidArgument("gbrt: depth must be >= 1");
  if (!(params.rate > 0.0)) throw InvalidArgument("gbrt: rate must be > 0");
  GbrtModel m;
  m.params = params;
  m.base = w.dot(y) / w.sum();
  const auto order = presort(x);
  Vector f = Vector::Constant(y.size(), m.base);
  for (std::size_t t = 0; t < params.trees; ++t) {
    const Vector r = y - f;
    RegressionTree tree = grow(x, r, w, params.depth, order);
    for (Eigen::Index i = 0; i < x.rows(); ++i) f(i) += params.rate * tree.predict(x.row(i));
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace

RegressionTree fit_regression_tree(const Matrix& x, const Vector& target, const Vector& weights,
                                   std::size_t depth) {
  if (x.rows() != target.size() || weights.size() != target.size())
    throw InvalidArgument("fit_regression_tree: length mismatch");
  return grow(x, target, weights, depth, presort(x));
}

Vector GbrtModel::predict_staged(const Matrix& query, std::size_t n_trees) const {
  n_trees = std::min(n_trees, trees.size());
  Vector out = Vector::Constant(query.rows(), base);
  for (Eigen::Index i = 0; i < query.rows(); ++i)
    for (std::size_t t = 0; t < n_trees; ++t) out(i) += params.rate * trees[t].predict(query.row(i));
  return out;
}

PredictiveDistribution GbrtModel::predict(const Matrix& query) const {
  return PredictiveDistribution::point(predict_staged(query, trees.size()));
}

GbrtModel fit_gbrt_fixed(const Dataset& train, const std::optional<Vector>& weights,
                         const GbrtParams& params) {
  train.validate();
  return boost(train.x, train.labels(), check_weights(train, weights), params);
}

GbrtModel fit_gbrt(const Dataset& train, const std::optional<Vector>& weights, const GbrtGrid& grid,
                   std::size_t folds, std::uint64_t seed) {
  train.validate();
  const Vector w = check_weights(train, weights);
  const Vector& y = train.labels();
  const std::size_t n = train.rows();
  if (grid.trees.empty() || grid.depths.empty() || grid.rates.empty())
    throw InvalidArgument("fit_gbrt: empty hyperparameter grid");
  if (folds < 2 || folds > n) throw InvalidArgument("fit_gbrt: invalid fold count");
  const std::size_t max_trees = *std::max_element(grid.trees.begin(), grid.trees.end());

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed);
  shuffle(perm, rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  std::vector<GbrtParams> combos;
  for (std::size_t d : grid.depths)
    for (double r : grid.rates)
      for (std::size_t t : grid.trees) combos.push_back({t, d, r});
  std::vector<double> sse(combos.size(), 0.0);
  double wsum = 0.0;

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
    const Dataset dtr = train.subset(tr);
    const Dataset dte = train.subset(te);
    Vector wtr(static_cast<Eigen::Index>(tr.size())), wte(static_cast<Eigen::Index>(te.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) wtr(static_cast<Eigen::Index>(i)) = w(static_cast<Eigen::Index>(tr[i]));
    for (std::size_t i = 0; i < te.size(); ++i) wte(static_cast<Eigen::Index>(i)) = w(static_cast<Eigen::Index>(te[i]));
    wsum += wte.sum();
    for (std::size_t d : grid.depths) {
      for (double r : grid.rates) {
        const GbrtModel m = boost(dtr.x, dtr.labels(), wtr, {max_trees, d, r});
        for (std::size_t c = 0; c < combos.size(); ++c) {
          if (combos[c].depth != d || combos[c].rate != r) continue;
          const Vector pred = m.predict_staged(dte.x, combos[c].trees);
          sse[c] += wte.dot((dte.labels() - pred).array().square().matrix());
        }
      }
    }
  }
  std::size_t best = 0;
  std::vector<double> cv(combos.size());
  for (std::size_t c = 0; c < combos.size(); ++c) {
    cv[c] = sse[c] / wsum;
    if (cv[c] < cv[best]) best = c;
  }
  GbrtModel m = boost(train.x, y, w, combos[best]);
  m.grid = std::move(combos);
  m.cv_mse = std::move(cv);
  return m;
}

FittedPtr GbrtRegressor::fit(const Dataset& train) const {
  return std::make_shared<GbrtModel>(fit_gbrt(train, std::nullopt, grid_, folds_, seed_));
}

FittedPtr GbrtRegressor::fit_weighted(const Dataset& train, const Vector& weights) const {
  return std::make_shared<GbrtModel>(fit_gbrt(train, weights, grid_, folds_, seed_));
}

}  // namespace workbench
