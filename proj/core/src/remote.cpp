#include "workbench/remote.hpp"

#include <charconv>
#include <chrono>

#include "httplib.h"
#include "json.hpp"
#include "workbench/error.hpp"

namespace workbench {

Endpoint Endpoint::parse(const std::string& url) {
  std::string rest = url;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) {
    rest = rest.substr(scheme.size());
  } else if (rest.find("://") != std::string::npos) {
    throw InvalidArgument("remote endpoint: only http:// is supported: " + url);
  }
  Endpoint e;
  const auto slash = rest.find('/');
  std::string hostport = rest.substr(0, slash);
  if (slash != std::string::npos) e.base_path = rest.substr(slash);
  while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
  const auto colon = hostport.rfind(':');
  if (colon != std::string::npos) {
    const std::string p = hostport.substr(colon + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
    if (ec != std::errc() || ptr != p.data() + p.size() || port <= 0 || port > 65535)
      throw InvalidArgument("remote endpoint: bad port in " + url);
    e.port = port;
    hostport = hostport.substr(0, colon);
  }
  if (hostport.empty()) throw InvalidArgument("remote endpoint: missing host in " + url);
  e.host = hostport;
  return e;
}

namespace {

httplib::Client make_client(const Endpoint& e, int timeout_ms) {
  httplib::Client cli(e.host, e.port);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  return cli;
}

using Clock = std::chrono::steady_clock;

[[noreturn]] void raise_transport(httplib::Error err, const std::string& where, Clock::time_point start,
                                  int timeout_ms) {
  const std::string msg = where + ": " + httplib::to_string(err);
  if (err == httplib::Error::ConnectionTimeout) throw TimeoutError(msg);
  // An expired socket timeout surfaces as a plain read/write failure.
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
  if ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= timeout_ms * 9 / 10)
    throw TimeoutError(msg);
  throw TransportError(msg);
}

}  // namespace

PredictiveDistribution remote_predict(const std::string& endpoint, const Dataset& train,
                                      const Matrix& query, Task task, int timeout_ms) {
  if (!train.labeled()) throw InvalidArgument("remote_predict: training set must be labeled");
  const Endpoint e = Endpoint::parse(endpoint);
  FitPredictRequest req;
  req.task = task;
  req.train = train;
  req.query = query;
  const std::string body = encode_request(req);
  auto cli = make_client(e, timeout_ms);
  const auto start = Clock::now();
  const auto res = cli.Post(e.base_path + "/v1/fit_predict", body, "application/json");
  if (!res) raise_transport(res.error(), "POST " + endpoint, start, timeout_ms);
  if (res->status != 200) throw ServerError(res->status, decode_error(res->body));
  return decode_response(res->body, static_cast<std::size_t>(query.rows()));
}

RemoteHealth remote_health(const std::string& endpoint, int timeout_ms) {
  const Endpoint e = Endpoint::parse(endpoint);
  auto cli = make_client(e, timeout_ms);
  const auto start = Clock::now();
  const auto res = cli.Get(e.base_path + "/v1/health");
  if (!res) raise_transport(res.error(), "GET " + endpoint, start, timeout_ms);
  if (res->status != 200) throw ServerError(res->status, decode_error(res->body));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return {j.at("status").get<std::string>(), j.at("model").get<std::string>()};
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(std::string("health: ") + ex.what());
  }
}

namespace {

class RemoteModel final : public FittedModel {
 public:
  RemoteModel(std::string endpoint, Task task, int timeout_ms, Dataset train)
      : endpoint_(std::move(endpoint)), task_(task), timeout_ms_(timeout_ms), train_(std::move(train)) {}

  PredictiveDistribution predict(const Matrix& query) const override {
    return remote_predict(endpoint_, train_, query, task_, timeout_ms_);
  }

 private:
  std::string endpoint_;
  Task task_;
  int timeout_ms_;
  Dataset train_;
};

}  // namespace

FittedPtr RemotePredictor::fit(const Dataset& train) const {
  train.validate();
  return std::make_shared<RemoteModel>(endpoint_, task_, timeout_ms_, train);
}

}  // namespace workbench
