#include "workbench/wire.hpp"

#include <cmath>

#include "json.hpp"
#include "workbench/error.hpp"

namespace workbench {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) throw InvalidArgument("wire: non-finite value");
      r.push_back(m(i, j));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw InvalidArgument("wire: non-finite value");
    a.push_back(v(i));
  }
  return a;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw ProtocolError(std::string("wire: ") + what + " must be numeric");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ProtocolError(std::string("wire: ") + what + " must be finite");
  return v;
}

Matrix matrix_from(const json& j, const char* what, Eigen::Index cols = -1) {
  if (!j.is_array()) throw ProtocolError(std::string("wire: ") + what + " must be an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n > 0 && !j[0].is_array()) throw ProtocolError(std::string("wire: ") + what + " rows must be arrays");
  const Eigen::Index p = n > 0 ? static_cast<Eigen::Index>(j[0].size()) : (cols < 0 ? 0 : cols);
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != p)
      throw ProtocolError(std::string("wire: ragged ") + what);
    for (Eigen::Index k = 0; k < p; ++k) m(i, k) = number(r[static_cast<std::size_t>(k)], what);
  }
  return m;
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw ProtocolError(std::string("wire: ") + what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

json parse(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("wire: invalid JSON: ") + e.what());
  }
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw ProtocolError(std::string("wire: missing field ") + key);
  return obj.at(key);
}

json dataset_json(const Dataset& d) {
  json j;
  j["x"] = matrix_json(d.x);
  if (d.labeled()) j["y"] = vector_json(*d.y);
  return j;
}

Dataset dataset_from(const json& j) {
  Dataset d(matrix_from(field(j, "x"), "x"));
  if (j.contains("y")) {
    d.y = vector_from(j.at("y"), "y");
    if (d.y->size() != d.x.rows()) throw ProtocolError("wire: y length differs from x rows");
  }
  return d;
}

}  // namespace

std::string to_string(Task t) { return t == Task::Regression ? "regression" : "classification"; }

Task parse_task(const std::string& s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  throw InvalidArgument("unknown task: " + s);
}

std::string encode_request(const FitPredictRequest& req) {
  json j;
  j["task"] = to_string(req.task);
  j["train"] = dataset_json(req.train);
  j["query"] = json{{"x", matrix_json(req.query)}};
  j["quantiles"] = req.quantiles;
  return j.dump();
}

FitPredictRequest decode_request(const std::string& body) {
  const json j = parse(body);
  FitPredictRequest r;
  const json& task = field(j, "task");
  if (!task.is_string()) throw ProtocolError("wire: task must be a string");
  try {
    r.task = parse_task(task.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ProtocolError(e.what());
  }
  r.train = dataset_from(field(j, "train"));
  if (!r.train.labeled()) throw ProtocolError("wire: train.y missing");
  r.query = matrix_from(field(field(j, "query"), "x"), "query.x", r.train.x.cols());
  if (r.query.rows() > 0 && r.query.cols() != r.train.x.cols())
    throw ProtocolError("wire: query and train column counts differ");
  if (j.contains("quantiles")) {
    const Vector q = vector_from(j.at("quantiles"), "quantiles");
    r.quantiles.assign(q.data(), q.data() + q.size());
  }
  return r;
}

std::string encode_response(const PredictiveDistribution& pd) {
  json j;
  j["mean"] = vector_json(pd.mean);
  j["sd"] = vector_json(pd.sd);
  j["quantiles"] = matrix_json(pd.quantiles);
  return j.dump();
}

PredictiveDistribution decode_response(const std::string& body, std::size_t expected_rows) {
  const json j = parse(body);
  PredictiveDistribution pd;
  pd.mean = vector_from(field(j, "mean"), "mean");
  pd.sd = vector_from(field(j, "sd"), "sd");
  pd.quantiles = matrix_from(field(j, "quantiles"), "quantiles",
                             static_cast<Eigen::Index>(kQuantileLevels.size()));
  if (pd.size() != expected_rows) throw ProtocolError("wire: response length differs from query rows");
  if (pd.quantiles.cols() != static_cast<Eigen::Index>(kQuantileLevels.size()))
    throw ProtocolError("wire: wrong number of quantile columns");
  try {
    pd.validate();
  } catch (const InvalidArgument& e) {
    throw ProtocolError(std::string("wire: invalid predictive distribution: ") + e.what());
  }
  return pd;
}

std::string encode_error(const std::string& message) { return json{{"error", message}}.dump(); }

std::string decode_error(const std::string& body) {
  try {
    const json j = json::parse(body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
  } catch (const json::exception&) {
  }
  return body;
}

std::string dataset_to_json(const Dataset& d) { return dataset_json(d).dump(); }

Dataset dataset_from_json(const std::string& text) { return dataset_from(parse(text)); }

}  // namespace workbench
