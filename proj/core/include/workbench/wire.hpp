#pragma once

// JSON encodings of the fit-predict wire protocol. Kept string-based so the
// JSON library stays out of public headers.

#include <string>
#include <vector>

#include "workbench/predictor.hpp"

namespace workbench {

enum class Task { Regression, Classification };

std::string to_string(Task t);
Task parse_task(const std::string& s);

struct FitPredictRequest {
  Task task = Task::Regression;
  Dataset train;
  Matrix query;
  std::vector<double> quantiles{kQuantileLevels.begin(), kQuantileLevels.end()};
};

std::string encode_request(const FitPredictRequest& req);
/// Throws ProtocolError on malformed input.
FitPredictRequest decode_request(const std::string& body);

std::string encode_response(const PredictiveDistribution& pd);
/// Parses and validates a response body; ProtocolError on any violation,
/// including a row count different from `expected_rows`.
PredictiveDistribution decode_response(const std::string& body, std::size_t expected_rows);

std::string encode_error(const std::string& message);
/// Extracts the `error` string of an error body, or the raw body if absent.
std::string decode_error(const std::string& body);

/// Dataset as {"x": [[...]], "y": [...]}; y omitted when unlabeled.
std::string dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const std::string& text);

}  // namespace workbench
