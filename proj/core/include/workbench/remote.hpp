#pragma once

#include <string>

#include "workbench/predictor.hpp"
#include "workbench/wire.hpp"

namespace workbench {

/// http://host[:port][/base] split into parts.
struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;  // no trailing slash

  static Endpoint parse(const std::string& url);
};

/// One POST /v1/fit_predict round trip. Failures raise TransportError,
/// TimeoutError, ProtocolError or ServerError; nothing is retried.
PredictiveDistribution remote_predict(const std::string& endpoint, const Dataset& train,
                                      const Matrix& query, Task task, int timeout_ms = 30000);

struct RemoteHealth {
  std::string status;
  std::string model;
};

RemoteHealth remote_health(const std::string& endpoint, int timeout_ms = 5000);

/// Predictor backed by a remote service. fit only stores the training set;
/// every predict call is a full fit-predict request.
class RemotePredictor final : public Predictor {
 public:
  RemotePredictor(std::string endpoint, Task task, int timeout_ms = 30000)
      : endpoint_(std::move(endpoint)), task_(task), timeout_ms_(timeout_ms) {}
  FittedPtr fit(const Dataset& train) const override;
  std::string name() const override { return "remote"; }

 private:
  std::string endpoint_;
  Task task_;
  int timeout_ms_;
};

}  // namespace workbench
