#include "workbench/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"
#include "workbench/classifiers.hpp"
#include "workbench/covshift.hpp"
#include "workbench/gbrt.hpp"
#include "workbench/gpr.hpp"
#include "workbench/hte.hpp"
#include "workbench/krr.hpp"
#include "workbench/lasso.hpp"
#include "workbench/linear.hpp"
#include "workbench/mestim.hpp"
#include "workbench/metrics.hpp"
#include "workbench/parallel.hpp"
#include "workbench/remote.hpp"

#ifndef WORKBENCH_VERSION
#define WORKBENCH_VERSION "0.0.0"
#endif

namespace workbench {

using json = nlohmann::json;

std::string version() { return WORKBENCH_VERSION; }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Semisup: return "semisup";
    case ExperimentKind::Cate: return "cate";
    case ExperimentKind::Covshift: return "covshift";
    case ExperimentKind::Noise: return "noise";
    case ExperimentKind::Sparse: return "sparse";
    case ExperimentKind::Probe: return "probe";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::Semisup, ExperimentKind::Cate, ExperimentKind::Covshift, ExperimentKind::Noise,
                 ExperimentKind::Sparse, ExperimentKind::Probe})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown experiment kind '" + s + "'");
}

std::vector<std::string> allowed_metrics(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Semisup: return {"sq_error", "relative_mse", "bias2", "variance"};
    case ExperimentKind::Noise: return {"excess_risk", "test_error"};
    case ExperimentKind::Sparse: return {"test_mse", "relative_mse", "r2_surrogate", "bias2", "variance"};
    default: return {"test_mse", "relative_mse"};
  }
}

std::vector<std::string> allowed_methods(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Semisup: return {"vanilla", "impute-i", "debias-d", "ppi"};
    case ExperimentKind::Cate: return {"S", "T", "X", "R", "DR", "OracleR"};
    case ExperimentKind::Covshift: return {"pl", "oracle", "naive", "iw", "direct"};
    case ExperimentKind::Noise: return {"bayes", "lda", "knn", "plugin"};
    default: return {"direct"};
  }
}

namespace {

std::string beta_name(BetaType b) { return b == BetaType::I ? "I" : "II"; }
std::string cov_name(CovType c) { return c == CovType::Identity ? "identity" : "banded"; }

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// ---------------------------------------------------------------------------
// Strict object reader: every key must be consumed.

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<std::string> str(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<double> num(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "must be finite");
    return d;
  }

  std::optional<std::uint64_t> u64(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(at(key), "expected a non-negative integer");
  }

  std::optional<bool> boolean(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::vector<double>> num_list(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(at(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto parse_enum(const std::string& field, const std::string& value, F parse) {
  try {
    return parse(value);
  } catch (const InvalidArgument& e) {
    throw ConfigError(field, e.what());
  }
}

DgpSpec default_dgp(ExperimentKind kind) {
  DgpSpec d;
  switch (kind) {
    case ExperimentKind::Semisup: d.n = 300; break;
    case ExperimentKind::Cate: d.n = 500; d.n_test = 1000; break;
    case ExperimentKind::Covshift: d.n = 500; d.n_test = 10000; break;
    case ExperimentKind::Noise: d.n = 1000; d.n_test = 10000; break;
    case ExperimentKind::Sparse: d.p = 100; d.n = 500; d.n_test = 1000; break;
    case ExperimentKind::Probe: d.n = 31; break;
  }
  return d;
}

std::vector<std::string> dgp_keys(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Semisup: return {"setting", "p", "n", "m", "tau", "n_mc"};
    case ExperimentKind::Cate: return {"setup", "n", "n_test", "sigma2"};
    case ExperimentKind::Covshift: return {"mean_fn", "n", "n_test", "n_aux", "lambda_grid"};
    case ExperimentKind::Noise: return {"model", "n", "n_test", "rho"};
    case ExperimentKind::Sparse: return {"p", "s", "beta_type", "cov_type", "snr", "n", "n_test"};
    case ExperimentKind::Probe: return {"probe", "n"};
  }
  return {};
}

DgpSpec parse_dgp(const json& j, ExperimentKind kind) {
  DgpSpec d = default_dgp(kind);
  Reader r(j, "dgp");
  const auto keys = dgp_keys(kind);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!contains(keys, it.key()))
      throw ConfigError(r.at(it.key()), "not a " + to_string(kind) + " generator argument");
  if (auto v = r.str("setting")) d.setting = parse_enum(r.at("setting"), *v, parse_semisup_setting);
  if (auto v = r.str("setup")) d.setup = parse_enum(r.at("setup"), *v, parse_cate_setup);
  if (auto v = r.str("mean_fn")) d.mean_fn = parse_enum(r.at("mean_fn"), *v, parse_mean_fn);
  if (auto v = r.str("model")) d.noise_model = parse_enum(r.at("model"), *v, parse_noise_model);
  if (auto v = r.str("beta_type")) d.beta_type = parse_enum(r.at("beta_type"), *v, parse_beta_type);
  if (auto v = r.str("cov_type")) d.cov_type = parse_enum(r.at("cov_type"), *v, parse_cov_type);
  if (auto v = r.str("probe")) d.probe = parse_enum(r.at("probe"), *v, parse_probe_kind);
  if (auto v = r.u64("p")) d.p = *v;
  if (auto v = r.u64("n")) d.n = *v;
  if (auto v = r.u64("m")) d.m = *v;
  if (auto v = r.u64("n_mc")) d.n_mc = *v;
  if (auto v = r.u64("n_test")) d.n_test = *v;
  if (auto v = r.u64("n_aux")) d.n_aux = *v;
  if (auto v = r.u64("s")) d.s = *v;
  if (auto v = r.num("tau")) d.tau = *v;
  if (auto v = r.num("sigma2")) d.sigma2 = *v;
  if (auto v = r.num("rho")) d.rho = *v;
  if (auto v = r.num("snr")) d.snr = *v;
  if (auto v = r.num_list("lambda_grid")) d.lambda_grid = *v;
  r.finish();
  return d;
}

json dgp_to_json(const DgpSpec& d, ExperimentKind kind) {
  json j;
  switch (kind) {
    case ExperimentKind::Semisup:
      j = {{"setting", to_string(d.setting)}, {"p", d.p}, {"n", d.n}, {"m", d.m}, {"n_mc", d.n_mc}};
      if (d.setting == SemiSupSetting::Quantile) j["tau"] = d.tau;
      break;
    case ExperimentKind::Cate:
      j = {{"setup", to_string(d.setup)}, {"n", d.n}, {"n_test", d.n_test}, {"sigma2", d.sigma2}};
      break;
    case ExperimentKind::Covshift:
      j = {{"mean_fn", to_string(d.mean_fn)}, {"n", d.n}, {"n_test", d.n_test},
           {"n_aux", d.n_aux == 0 ? d.n : d.n_aux},
           {"lambda_grid", d.lambda_grid.empty() ? default_lambda_grid() : d.lambda_grid}};
      break;
    case ExperimentKind::Noise:
      j = {{"model", to_string(d.noise_model)}, {"n", d.n}, {"n_test", d.n_test}, {"rho", d.rho}};
      break;
    case ExperimentKind::Sparse:
      j = {{"p", d.p}, {"s", d.s}, {"beta_type", beta_name(d.beta_type)}, {"cov_type", cov_name(d.cov_type)},
           {"snr", d.snr}, {"n", d.n}, {"n_test", d.n_test}};
      break;
    case ExperimentKind::Probe:
      j = {{"probe", to_string(d.probe)}, {"n", d.n}};
      break;
  }
  return j;
}

const std::map<std::string, std::map<std::string, double>>& predictor_defaults() {
  static const std::map<std::string, std::map<std::string, double>> d{
      {"gpr", {}},
      {"krr", {{"lambda", 1e-3}, {"lengthscale", 0.0}}},
      {"gbrt", {{"folds", 5}}},
      {"lasso", {{"folds", 5}}},
      {"ols", {}},
      {"poly", {{"degree", 3}, {"lambda", 1e-8}}},
      {"logistic", {}},
      {"remote", {{"timeout_ms", 30000}}},
      {"tabpfn", {{"timeout_ms", 30000}}},
  };
  return d;
}

// Optional single-value gbrt grid overrides.
const std::vector<std::string> kGbrtGridKeys{"trees", "depth", "rate"};

PredictorSpec parse_predictor(const json& j, const std::string& path) {
  PredictorSpec p;
  if (j.is_string()) {
    p.type = j.get<std::string>();
  } else {
    Reader r(j, path);
    auto type = r.str("type");
    if (!type) throw ConfigError(r.at("type"), "missing");
    p.type = *type;
    if (const json* params = r.find("params")) {
      Reader pr(*params, r.at("params"));
      for (auto it = params->begin(); it != params->end(); ++it) p.params[it.key()] = *pr.num(it.key());
    }
    if (auto g = r.num_list("noise_grid")) p.noise_grid = *g;
    if (auto e = r.str("endpoint")) p.endpoint = *e;
    r.finish();
  }
  const auto& defaults = predictor_defaults();
  auto it = defaults.find(p.type);
  if (it == defaults.end()) throw ConfigError(path + ".type", "unknown predictor '" + p.type + "'");
  for (const auto& [k, v] : p.params) {
    const bool grid_key = p.type == "gbrt" && contains(kGbrtGridKeys, k);
    if (!it->second.count(k) && !grid_key)
      throw ConfigError(path + ".params." + k, "not a parameter of '" + p.type + "'");
  }
  for (const auto& [k, v] : it->second) p.params.emplace(k, v);
  if (!p.noise_grid.empty() && p.type != "gpr") throw ConfigError(path + ".noise_grid", "only gpr takes a noise grid");
  if (!p.endpoint.empty() && !p.is_remote()) throw ConfigError(path + ".endpoint", "only remote predictors take an endpoint");
  return p;
}

json predictor_to_json(const PredictorSpec& p) {
  json j{{"type", p.type}, {"params", json::object()}};
  for (const auto& [k, v] : p.params) j["params"][k] = v;
  if (p.type == "gpr") j["noise_grid"] = p.noise_grid.empty() ? kDefaultNoiseGrid : p.noise_grid;
  if (p.is_remote()) j["endpoint"] = p.endpoint;
  return j;
}

std::string normalize_method(ExperimentKind kind, const std::string& m, const std::string& field) {
  try {
    if (kind == ExperimentKind::Semisup) return to_string(parse_semisup_strategy(m));
    if (kind == ExperimentKind::Cate) return to_string(parse_cate_learner(m));
  } catch (const InvalidArgument&) {
    throw ConfigError(field, "unknown method '" + m + "' for " + to_string(kind));
  }
  std::string lower = m;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!contains(allowed_methods(kind), lower)) throw ConfigError(field, "unknown method '" + m + "' for " + to_string(kind));
  return lower;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing, canonical form, validation.

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  Reader r(j, "");
  ExperimentConfig c;
  auto name = r.str("name");
  if (!name || name->empty()) throw ConfigError("name", "missing");
  c.name = *name;
  auto kind = r.str("kind");
  if (!kind) throw ConfigError("kind", "missing");
  c.kind = parse_enum("kind", *kind, parse_experiment_kind);
  if (const json* d = r.find("dgp")) c.dgp = parse_dgp(*d, c.kind);
  else c.dgp = default_dgp(c.kind);

  const json* ests = r.find("estimators");
  if (!ests || !ests->is_array() || ests->empty()) throw ConfigError("estimators", "expected a non-empty array");
  for (std::size_t i = 0; i < ests->size(); ++i) {
    const std::string path = "estimators[" + std::to_string(i) + "]";
    Reader er((*ests)[i], path);
    EstimatorSpec e;
    auto method = er.str("method");
    if (!method) throw ConfigError(er.at("method"), "missing");
    e.method = normalize_method(c.kind, *method, er.at("method"));
    e.name = er.str("name").value_or(e.method);
    if (const json* b = er.find("base")) e.base = parse_predictor(*b, er.at("base"));
    if (const json* p = er.find("propensity")) e.propensity = parse_predictor(*p, er.at("propensity"));
    if (auto v = er.num("clip")) e.clip = *v;
    if (auto v = er.boolean("clean_labels")) e.clean_labels = *v;
    er.finish();
    if (c.kind == ExperimentKind::Cate && !e.propensity &&
        (e.method == "X" || e.method == "DR" || e.method == "R"))
      e.propensity = PredictorSpec{"logistic", {}, {}, {}};
    c.estimators.push_back(std::move(e));
  }

  if (auto v = r.u64("replicates")) c.replicates = *v;
  if (const json* m = r.find("metrics")) {
    if (!m->is_array()) throw ConfigError("metrics", "expected an array of names");
    for (const auto& e : *m) {
      if (!e.is_string()) throw ConfigError("metrics", "expected an array of names");
      c.metrics.push_back(e.get<std::string>());
    }
  } else {
    c.metrics = {allowed_metrics(c.kind).front()};
  }
  c.reference = r.str("reference").value_or("");
  c.per_component = r.boolean("per_component").value_or(false);
  c.seed = r.u64("seed");
  c.output = r.str("output").value_or("");
  c.notes = r.str("notes").value_or("");
  r.finish();
  return c;
}

std::string ExperimentConfig::to_json(bool include_unhashed) const {
  json j;
  j["name"] = name;
  j["kind"] = to_string(kind);
  j["dgp"] = dgp_to_json(dgp, kind);
  j["estimators"] = json::array();
  for (const auto& e : estimators) {
    json ej{{"name", e.name}, {"method", e.method}};
    if (e.base) ej["base"] = predictor_to_json(*e.base);
    if (kind == ExperimentKind::Cate) {
      if (e.propensity) ej["propensity"] = predictor_to_json(*e.propensity);
      if (e.method == "DR" || e.method == "R" || e.method == "OracleR") ej["clip"] = e.clip;
    }
    if (kind == ExperimentKind::Noise && e.method != "bayes") ej["clean_labels"] = e.clean_labels;
    j["estimators"].push_back(std::move(ej));
  }
  j["replicates"] = replicates;
  j["metrics"] = metrics;
  if (!reference.empty()) j["reference"] = reference;
  if (contains(metrics, "bias2") || contains(metrics, "variance")) j["per_component"] = per_component;
  if (seed) j["seed"] = *seed;
  if (include_unhashed) {
    if (!output.empty()) j["output"] = output;
    if (!notes.empty()) j["notes"] = notes;
  }
  return j.dump(2);
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(to_json(false)); }

void ExperimentConfig::resolve_endpoints(const std::string& default_endpoint) {
  for (auto& e : estimators)
    for (auto* p : {&e.base, &e.propensity})
      if (*p && (*p)->is_remote() && (*p)->endpoint.empty()) (*p)->endpoint = default_endpoint;
}

void ExperimentConfig::validate() const {
  if (!seed) throw ConfigError("seed", "missing; every run needs an explicit master seed");
  if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
  const DgpSpec& d = dgp;
  auto positive = [](std::size_t v, const char* f) {
    if (v == 0) throw ConfigError(std::string("dgp.") + f, "must be >= 1");
  };
  switch (kind) {
    case ExperimentKind::Semisup:
      positive(d.p, "p");
      positive(d.m, "m");
      if (d.n <= d.p + 1) throw ConfigError("dgp.n", "must exceed p + 1");
      if (!(d.tau > 0.0 && d.tau < 1.0)) throw ConfigError("dgp.tau", "must lie in (0, 1)");
      if (d.n_mc < 10000) throw ConfigError("dgp.n_mc", "must be >= 10000");
      break;
    case ExperimentKind::Cate:
      if (d.n < 4) throw ConfigError("dgp.n", "must be >= 4");
      positive(d.n_test, "n_test");
      if (!(d.sigma2 >= 0.0)) throw ConfigError("dgp.sigma2", "must be >= 0");
      break;
    case ExperimentKind::Covshift:
      if (d.n < 4) throw ConfigError("dgp.n", "must be >= 4");
      positive(d.n_test, "n_test");
      for (double l : d.lambda_grid)
        if (!(l > 0.0)) throw ConfigError("dgp.lambda_grid", "values must be positive");
      break;
    case ExperimentKind::Noise:
      if (d.n < 10) throw ConfigError("dgp.n", "must be >= 10");
      positive(d.n_test, "n_test");
      if (!(d.rho >= 0.0 && d.rho < 0.5)) throw ConfigError("dgp.rho", "must lie in [0, 0.5)");
      break;
    case ExperimentKind::Sparse:
      positive(d.p, "p");
      if (d.s < 1 || d.s > d.p) throw ConfigError("dgp.s", "must satisfy 1 <= s <= p");
      if (!(d.snr > 0.0)) throw ConfigError("dgp.snr", "must be positive");
      if (d.n < 10) throw ConfigError("dgp.n", "must be >= 10");
      if (d.n_test <= d.s + 1) throw ConfigError("dgp.n_test", "must exceed s + 1");
      break;
    case ExperimentKind::Probe:
      if (d.n < 2) throw ConfigError("dgp.n", "must be >= 2");
      break;
  }

  std::set<std::string> names;
  const auto methods = allowed_methods(kind);
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    const auto& e = estimators[i];
    const std::string path = "estimators[" + std::to_string(i) + "]";
    if (e.name.empty()) throw ConfigError(path + ".name", "must not be empty");
    if (!names.insert(e.name).second) throw ConfigError(path + ".name", "duplicate estimator name '" + e.name + "'");
    if (!contains(methods, e.method)) throw ConfigError(path + ".method", "unknown method '" + e.method + "'");

    bool needs_base = true, allows_base = true;
    if (kind == ExperimentKind::Semisup && e.method == "vanilla") needs_base = allows_base = false;
    if (kind == ExperimentKind::Covshift && e.method != "direct") needs_base = false;
    if (kind == ExperimentKind::Covshift && e.method == "oracle") allows_base = false;
    if (kind == ExperimentKind::Noise && e.method != "plugin") needs_base = allows_base = false;
    if (needs_base && !e.base) throw ConfigError(path + ".base", "method '" + e.method + "' needs a base predictor");
    if (!allows_base && e.base) throw ConfigError(path + ".base", "method '" + e.method + "' takes no base predictor");
    if (kind == ExperimentKind::Covshift && (e.method == "naive" || e.method == "iw") && e.base && e.base->type != "gbrt")
      throw ConfigError(path + ".base.type", "naive and iw fit gradient boosting; base must be gbrt");
    if (kind == ExperimentKind::Cate && (e.method == "R" || e.method == "OracleR") && e.base &&
        e.base->type != "gbrt" && e.base->type != "poly")
      throw ConfigError(path + ".base.type", "'" + e.base->type + "' does not support sample weights; R-learners need gbrt or poly");
    if (kind == ExperimentKind::Cate && (e.method == "DR" || e.method == "R" || e.method == "OracleR") &&
        !(e.clip > 0.0 && e.clip < 0.5))
      throw ConfigError(path + ".clip", "must lie in (0, 0.5)");
    for (const auto& [label, spec] : {std::pair{"base", &e.base}, std::pair{"propensity", &e.propensity}}) {
      if (!*spec) continue;
      const auto& p = **spec;
      if (p.is_remote() && p.endpoint.empty())
        throw ConfigError(path + "." + label,
                          "predictor '" + p.type + "' needs an endpoint (set endpoint or WORKBENCH_REMOTE_ENDPOINT)");
      if (p.is_remote()) {
        try {
          Endpoint::parse(p.endpoint);
        } catch (const InvalidArgument& ex) {
          throw ConfigError(path + "." + label + ".endpoint", ex.what());
        }
      }
    }
  }

  if (metrics.empty()) throw ConfigError("metrics", "must not be empty");
  const auto allowed = allowed_metrics(kind);
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    if (!contains(allowed, m)) throw ConfigError("metrics", "'" + m + "' is not available for " + to_string(kind));
    if (!seen.insert(m).second) throw ConfigError("metrics", "duplicate metric '" + m + "'");
  }
  if (seen.count("relative_mse")) {
    if (reference.empty()) throw ConfigError("reference", "relative_mse needs a reference estimator");
    if (!names.count(reference)) throw ConfigError("reference", "no estimator named '" + reference + "'");
  }
  if ((seen.count("bias2") || seen.count("variance")) && replicates < 2)
    throw ConfigError("replicates", "bias2 and variance need at least 2 replicates");
}

std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(o, "override must look like key=value");
    const std::string key = o.substr(0, eq), raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ConfigError(key, "empty path component");
      json* next = nullptr;
      if (node->is_array()) {
        std::size_t idx = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
        if (ec != std::errc() || ptr != part.data() + part.size() || idx >= node->size())
          throw ConfigError(key, "'" + part + "' is not a valid index");
        next = &(*node)[idx];
      } else if (node->is_object() || node->is_null()) {
        next = &(*node)[part];
      } else {
        throw ConfigError(key, "cannot descend into a scalar");
      }
      if (dot == std::string::npos) {
        *next = value;
        break;
      }
      node = next;
      start = dot + 1;
    }
  }
  return j.dump();
}

// ---------------------------------------------------------------------------
// Running.

namespace {

struct Built {
  PredictorPtr predictor;
  WeightedRegressorPtr weighted;
};

GbrtGrid gbrt_grid(const PredictorSpec& p) {
  GbrtGrid g;
  if (auto it = p.params.find("trees"); it != p.params.end()) g.trees = {static_cast<std::size_t>(it->second)};
  if (auto it = p.params.find("depth"); it != p.params.end()) g.depths = {static_cast<std::size_t>(it->second)};
  if (auto it = p.params.find("rate"); it != p.params.end()) g.rates = {it->second};
  return g;
}

Built build(const PredictorSpec& p, std::uint64_t seed, Task task) {
  const auto& q = p.params;
  if (p.type == "gpr")
    return {std::make_shared<GprPredictor>(seed, p.noise_grid.empty() ? kDefaultNoiseGrid : p.noise_grid), nullptr};
  if (p.type == "krr")
    return {std::make_shared<KrrPredictor>(KernelSpec::rbf(q.at("lengthscale")), q.at("lambda")), nullptr};
  if (p.type == "gbrt") {
    auto g = std::make_shared<GbrtRegressor>(seed, gbrt_grid(p), static_cast<std::size_t>(q.at("folds")));
    return {g, g};
  }
  if (p.type == "lasso") return {std::make_shared<LassoPredictor>(seed, static_cast<std::size_t>(q.at("folds"))), nullptr};
  if (p.type == "ols") return {std::make_shared<OlsPredictor>(), nullptr};
  if (p.type == "poly") {
    auto r = std::make_shared<PolyRidge>(static_cast<std::size_t>(q.at("degree")), q.at("lambda"));
    return {r, r};
  }
  if (p.type == "logistic") return {std::make_shared<LogisticPropensity>(), nullptr};
  if (p.is_remote())
    return {std::make_shared<RemotePredictor>(p.endpoint, task, static_cast<int>(q.at("timeout_ms"))), nullptr};
  throw InvalidArgument("unknown predictor '" + p.type + "'");
}

double mse(const Vector& a, const Vector& b) { return (a - b).squaredNorm() / static_cast<double>(a.size()); }

struct EstimatorOutput {
  std::map<std::string, double> values;
  std::optional<std::vector<double>> theta;
};

struct ReplicateOutput {
  std::vector<MetricsRecord> records;
  std::vector<ErrorRecord> errors;
  std::vector<ThetaRecord> thetas;
};

struct Shared {
  Vector theta_star;
  WorkingModel working_model = WorkingModel::linear();
};

bool wants(const ExperimentConfig& c, const char* m) { return contains(c.metrics, m); }

// Per-kind replicate body: generates data once, then returns a callable that
// scores one estimator.
using Scorer = std::function<EstimatorOutput(const EstimatorSpec&, std::uint64_t)>;

Scorer prepare(const ExperimentConfig& c, const Shared& shared, std::uint64_t data_seed) {
  const DgpSpec& d = c.dgp;
  switch (c.kind) {
    case ExperimentKind::Semisup: {
      auto pair = std::make_shared<SemiSupPair>(gen_semisup(d.setting, d.p, d.n, d.m, data_seed));
      const Task task = d.setting == SemiSupSetting::Logistic ? Task::Classification : Task::Regression;
      return [pair, &shared, task](const EstimatorSpec& e, std::uint64_t seed) {
        Built b;
        if (e.base) b = build(*e.base, seed, task);
        const ThetaEstimate t = semisup_estimate(parse_semisup_strategy(e.method), shared.working_model,
                                                 b.predictor.get(), pair->labeled, pair->unlabeled);
        EstimatorOutput out;
        out.values["sq_error"] = (t.theta - shared.theta_star).squaredNorm();
        out.theta = std::vector<double>(t.theta.data(), t.theta.data() + t.theta.size());
        return out;
      };
    }
    case ExperimentKind::Cate: {
      auto data = std::make_shared<CausalDataset>(gen_cate(d.setup, d.n, d.sigma2, data_seed));
      auto test = std::make_shared<Matrix>(gen_cate_features(d.n_test, derive_seed(data_seed, 1)));
      return [data, test](const EstimatorSpec& e, std::uint64_t seed) {
        const Built base = build(*e.base, seed, Task::Regression);
        Built prop;
        if (e.propensity) prop = build(*e.propensity, derive_seed(seed, 1), Task::Classification);
        CateEstimate est;
        switch (parse_cate_learner(e.method)) {
          case CateLearner::S: est = s_learner(*base.predictor, *data); break;
          case CateLearner::T: est = t_learner(*base.predictor, *data); break;
          case CateLearner::X: est = x_learner(*base.predictor, *prop.predictor, *data); break;
          case CateLearner::DR: est = dr_learner(*base.predictor, *prop.predictor, *data, e.clip); break;
          case CateLearner::R: est = r_learner(*base.weighted, *base.predictor, *prop.predictor, *data, e.clip); break;
          case CateLearner::OracleR: est = oracle_r_learner(*base.weighted, *data, e.clip); break;
        }
        EstimatorOutput out;
        out.values["test_mse"] = evaluate_cate(est, *test, data->oracle);
        return out;
      };
    }
    case ExperimentKind::Covshift: {
      auto bundle = std::make_shared<CovShiftBundle>(
          gen_covshift(d.mean_fn, d.n, d.n_test, d.n_aux == 0 ? d.n : d.n_aux, data_seed));
      const std::vector<double> grid = d.lambda_grid.empty() ? default_lambda_grid() : d.lambda_grid;
      return [bundle, grid](const EstimatorSpec& e, std::uint64_t seed) {
        EstimatorOutput out;
        double v = 0.0;
        if (e.method == "pl") {
          Built imp;
          if (e.base) imp = build(*e.base, seed, Task::Regression);
          v = covshift_mse(pl_select(*bundle, grid, KernelSpec::rbf(), seed, imp.predictor.get()).chosen(), *bundle);
        } else if (e.method == "oracle") {
          v = covshift_mse(wang_oracle_select(*bundle, grid, KernelSpec::rbf(), seed).chosen(), *bundle);
        } else if (e.method == "naive" || e.method == "iw") {
          const GbrtGrid g = e.base ? gbrt_grid(*e.base) : GbrtGrid{};
          v = covshift_mse(e.method == "naive" ? *naive_fit(*bundle, seed, g) : *iw_fit(*bundle, seed, g), *bundle);
        } else {
          v = covshift_mse(*build(*e.base, seed, Task::Regression).predictor->fit(bundle->source), *bundle);
        }
        out.values["test_mse"] = v;
        return out;
      };
    }
    case ExperimentKind::Noise: {
      auto bundle = std::make_shared<NoisyLabelBundle>(gen_labelnoise(d.noise_model, d.n, d.rho, d.n_test, data_seed));
      return [bundle](const EstimatorSpec& e, std::uint64_t seed) {
        const Dataset train = e.clean_labels ? bundle->clean_train() : bundle->train;
        const Matrix& q = bundle->test.x;
        Labels pred;
        if (e.method == "bayes") {
          pred = bayes_classify(bundle->model, q);
        } else if (e.method == "lda") {
          pred = lda_classify(fit_lda(train), q);
        } else if (e.method == "knn") {
          pred = knn_classify(fit_knn_cv(train, 5, seed), q);
        } else {
          const Vector p = build(*e.base, seed, Task::Classification).predictor->fit(train)->predict_mean(q);
          pred.resize(static_cast<std::size_t>(p.size()));
          for (Eigen::Index i = 0; i < p.size(); ++i) pred[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
        }
        EstimatorOutput out;
        out.values["excess_risk"] = excess_risk(pred, *bundle);
        out.values["test_error"] = test_error(pred, *bundle);
        return out;
      };
    }
    case ExperimentKind::Sparse: {
      auto design = std::make_shared<SparseLinearDesign>(
          gen_sparse_linear(d.p, d.s, d.beta_type, d.cov_type, d.snr, d.n, d.n_test, data_seed));
      const bool surrogate = wants(c, "r2_surrogate") || wants(c, "bias2") || wants(c, "variance");
      return [design, surrogate](const EstimatorSpec& e, std::uint64_t seed) {
        const Vector pred = build(*e.base, seed, Task::Regression).predictor->fit(design->train)->predict_mean(design->test.x);
        EstimatorOutput out;
        out.values["test_mse"] = mse(pred, design->test.x * design->beta_star);
        if (surrogate) {
          const SurrogateFit s = linear_surrogate(pred, design->test.x, design->support);
          out.values["r2_surrogate"] = s.r2;
          out.theta = std::vector<double>(s.coef.data(), s.coef.data() + s.coef.size());
        }
        return out;
      };
    }
    case ExperimentKind::Probe: {
      auto probe = std::make_shared<FunctionProbe>(gen_function_probe(d.probe, d.n, data_seed));
      return [probe](const EstimatorSpec& e, std::uint64_t seed) {
        const Matrix& grid = probe->eval_grid.x;
        const Vector pred = build(*e.base, seed, Task::Regression).predictor->fit(probe->train)->predict_mean(grid);
        EstimatorOutput out;
        out.values["test_mse"] = mse(pred, eval_rows(probe->truth, grid));
        return out;
      };
    }
  }
  throw InvalidArgument("unhandled experiment kind");
}

ReplicateOutput run_one(const ExperimentConfig& c, const Shared& shared, std::size_t r) {
  ReplicateOutput out;
  const auto rep = static_cast<long>(r);
  const std::uint64_t rep_seed = derive_seed(*c.seed, r);
  Scorer scorer;
  try {
    scorer = prepare(c, shared, derive_seed(rep_seed, 0));
  } catch (const std::exception& ex) {
    out.errors.push_back({c.name, rep, "*", std::string("data generation failed: ") + ex.what()});
    return out;
  }

  const bool semisup = c.kind == ExperimentKind::Semisup;
  const std::string base_metric = semisup ? "sq_error" : "test_mse";
  std::vector<std::optional<EstimatorOutput>> results(c.estimators.size());
  for (std::size_t i = 0; i < c.estimators.size(); ++i) {
    const auto& e = c.estimators[i];
    try {
      auto res = scorer(e, derive_seed(rep_seed, fnv1a64(e.name)));
      for (const auto& [k, v] : res.values)
        if (!std::isfinite(v)) throw NumericalError("metric " + k + " is not finite");
      results[i] = std::move(res);
    } catch (const std::exception& ex) {
      out.errors.push_back({c.name, rep, e.name, ex.what()});
    }
  }

  std::optional<double> ref;
  for (std::size_t i = 0; i < c.estimators.size(); ++i)
    if (c.estimators[i].name == c.reference && results[i]) ref = results[i]->values.at(base_metric);

  for (std::size_t i = 0; i < c.estimators.size(); ++i) {
    if (!results[i]) continue;
    const auto& e = c.estimators[i];
    for (const auto& m : c.metrics) {
      if (m == "bias2" || m == "variance") continue;
      if (m == "relative_mse") {
        if (!ref) continue;
        if (*ref == 0.0) {
          out.errors.push_back({c.name, rep, e.name, "relative_mse: reference error is zero"});
          continue;
        }
        out.records.push_back({c.name, rep, e.name, m, results[i]->values.at(base_metric) / *ref});
      } else {
        out.records.push_back({c.name, rep, e.name, m, results[i]->values.at(m)});
      }
    }
    if (results[i]->theta) out.thetas.push_back({c.name, rep, e.name, *results[i]->theta});
  }
  if (wants(c, "relative_mse") && !ref)
    out.errors.push_back({c.name, rep, c.reference, "relative_mse skipped: reference estimator failed"});
  return out;
}

}  // namespace

RunResult run_replicated(const ExperimentConfig& config, unsigned jobs) {
  config.validate();
  RunResult result;
  Shared shared;
  const DgpSpec& d = config.dgp;
  if (config.kind == ExperimentKind::Semisup) {
    shared.working_model = WorkingModel::for_setting(d.setting, d.tau);
    const auto truth = mc_truth(d.setting, d.p,
                                d.setting == SemiSupSetting::Quantile ? std::optional<double>(d.tau) : std::nullopt,
                                d.n_mc, derive_seed(*config.seed, fnv1a64("mc_truth")), std::max(1u, jobs));
    shared.theta_star = truth.theta;
    if (!truth.note.empty()) result.notes.push_back(truth.note);
  } else if (config.kind == ExperimentKind::Sparse) {
    shared.theta_star = Vector::Ones(static_cast<Eigen::Index>(d.s));
  }
  result.theta_star.assign(shared.theta_star.data(), shared.theta_star.data() + shared.theta_star.size());

  std::vector<ReplicateOutput> slots(config.replicates);
  parallel_for(config.replicates, std::max(1u, jobs),
               [&](std::size_t r) { slots[r] = run_one(config, shared, r); });
  for (auto& s : slots) {
    result.records.insert(result.records.end(), s.records.begin(), s.records.end());
    result.errors.insert(result.errors.end(), s.errors.begin(), s.errors.end());
    result.thetas.insert(result.thetas.end(), s.thetas.begin(), s.thetas.end());
  }

  if (wants(config, "bias2") || wants(config, "variance")) {
    for (const auto& e : config.estimators) {
      std::vector<Vector> est;
      for (const auto& t : result.thetas)
        if (t.estimator == e.name) est.push_back(Eigen::Map<const Vector>(t.theta.data(), static_cast<Eigen::Index>(t.theta.size())));
      if (est.size() < 2) {
        result.errors.push_back({config.name, kPooledReplicate, e.name, "bias2/variance need 2 successful replicates"});
        continue;
      }
      const BiasVariance bv = bias_variance(est, shared.theta_star);
      for (const auto& m : config.metrics) {
        if (m != "bias2" && m != "variance") continue;
        const bool b = m == "bias2";
        result.records.push_back({config.name, kPooledReplicate, e.name, m, b ? bv.bias2 : bv.variance});
        if (!config.per_component) continue;
        const Vector& parts = b ? bv.bias2_by_component : bv.variance_by_component;
        for (Eigen::Index k = 0; k < parts.size(); ++k)
          result.records.push_back(
              {config.name, kPooledReplicate, e.name, m + "[" + std::to_string(k) + "]", parts(k)});
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation and output.

std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
  std::vector<AggregateRow> rows;
  std::vector<std::vector<double>> values;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.experiment, r.estimator, r.metric);
    auto [it, fresh] = index.emplace(key, rows.size());
    if (fresh) {
      rows.push_back({r.experiment, r.estimator, r.metric, 0, 0.0, 0.0, 0.0});
      values.emplace_back();
    }
    values[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& v = values[i];
    const auto n = static_cast<double>(v.size());
    rows[i].count = v.size();
    rows[i].mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    std::sort(v.begin(), v.end());
    rows[i].median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    if (v.size() < 2) {
      rows[i].se = std::numeric_limits<double>::quiet_NaN();
    } else {
      double ss = 0.0;
      for (double x : v) ss += (x - rows[i].mean) * (x - rows[i].mean);
      rows[i].se = std::sqrt(ss / (n - 1.0) / n);
    }
  }
  return rows;
}

namespace {

// RFC 4180 quoting when needed.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << "experiment,replicate,estimator,metric,value\n";
  for (const auto& r : records)
    out << csv_field(r.experiment) << ',' << r.replicate << ',' << csv_field(r.estimator) << ',' << r.metric << ','
        << format_double(r.value) << '\n';
}

void write_records_jsonl(std::ostream& out, const std::vector<MetricsRecord>& records) {
  for (const auto& r : records) {
    json j{{"experiment", r.experiment}, {"replicate", r.replicate}, {"estimator", r.estimator},
           {"metric", r.metric}, {"value", r.value}};
    out << j.dump() << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "experiment,estimator,metric,count,mean,median,se\n";
  for (const auto& r : rows)
    out << csv_field(r.experiment) << ',' << csv_field(r.estimator) << ',' << r.metric << ',' << r.count << ','
        << format_double(r.mean) << ',' << format_double(r.median) << ',' << format_double(r.se) << '\n';
}

void write_thetas_csv(std::ostream& out, const std::vector<ThetaRecord>& thetas) {
  out << "experiment,replicate,estimator,index,value\n";
  for (const auto& t : thetas)
    for (std::size_t k = 0; k < t.theta.size(); ++k)
      out << csv_field(t.experiment) << ',' << t.replicate << ',' << csv_field(t.estimator) << ',' << k << ','
          << format_double(t.theta[k]) << '\n';
}

void write_errors_csv(std::ostream& out, const std::vector<ErrorRecord>& errors) {
  out << "experiment,replicate,estimator,message\n";
  for (const auto& e : errors)
    out << csv_field(e.experiment) << ',' << e.replicate << ',' << csv_field(e.estimator) << ',' << csv_field(e.message)
        << '\n';
}

}  // namespace workbench
