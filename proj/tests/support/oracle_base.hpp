#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "workbench/predictor.hpp"
#include "workbench/synthgen.hpp"

namespace wbtest {

// Returns whichever candidate function reproduces the training labels to
// 1e-10; an interpolating learner for regressions whose truth is known.
class MatchingBase final : public workbench::Predictor {
 public:
  using Fn = workbench::FunctionModel::Fn;
  explicit MatchingBase(std::vector<std::pair<std::string, Fn>> candidates) : candidates_(std::move(candidates)) {}

  workbench::FittedPtr fit(const workbench::Dataset& train) const override {
    const workbench::Vector& y = train.labels();
    for (const auto& [name, f] : candidates_) {
      bool ok = true;
      for (Eigen::Index i = 0; i < train.x.rows() && ok; ++i) {
        const workbench::Vector row = train.x.row(i).transpose();
        double v = 0.0;
        try {
          v = f(row);
        } catch (const std::exception&) {
          ok = false;
          break;
        }
        ok = std::abs(v - y(i)) <= 1e-10;
      }
      if (ok) return std::make_shared<workbench::FunctionModel>(f);
    }
    throw std::runtime_error("MatchingBase: no candidate reproduces the labels");
  }
  std::string name() const override { return "matching-oracle"; }

 private:
  std::vector<std::pair<std::string, Fn>> candidates_;
};

// Candidates for a causal design: mu0, mu1 and tau over x, plus mu(t, x) over [t, x].
inline MatchingBase causal_oracle_base(const workbench::CateOracle& o) {
  const auto d = static_cast<Eigen::Index>(workbench::kCateDim);
  return MatchingBase({
      {"mu(t,x)", [o, d](const workbench::Vector& r) {
         if (r.size() != d + 1) throw std::invalid_argument("width");
         return o.mu(r(0) == 1.0 ? 1 : 0, r.tail(d));
       }},
      {"mu0", [o](const workbench::Vector& x) { return o.mu0(x); }},
      {"mu1", [o](const workbench::Vector& x) { return o.mu1(x); }},
      {"tau", [o](const workbench::Vector& x) { return o.effect(x); }},
  });
}

inline workbench::FixedFunctionPredictor oracle_propensity(const workbench::CateOracle& o) {
  return workbench::FixedFunctionPredictor("oracle-e", [o](const workbench::Vector& x) { return o.propensity(x); });
}

// Predicts the training mean everywhere.
class MeanBase final : public workbench::Predictor {
 public:
  workbench::FittedPtr fit(const workbench::Dataset& train) const override {
    const double m = train.labels().mean();
    return std::make_shared<workbench::FunctionModel>([m](const workbench::Vector&) { return m; });
  }
  std::string name() const override { return "mean"; }
};

}  // namespace wbtest
