#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "workbench/error.hpp"
#include "workbench/predictor.hpp"
#include "workbench/synthgen.hpp"

namespace workbench {

std::string version();
std::uint64_t fnv1a64(const std::string& bytes);

/// Validation failure naming the offending field by its dotted path.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidArgument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { Semisup, Cate, Covshift, Noise, Sparse, Probe };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

/// A learner: gpr, krr, gbrt, lasso, ols, poly, logistic, mean, remote or
/// tabpfn (remote with the model server's endpoint).
struct PredictorSpec {
  std::string type;
  std::map<std::string, double> params;
  std::vector<double> noise_grid;  // gpr only; empty means the default grid
  std::string endpoint;            // remote/tabpfn

  bool is_remote() const { return type == "remote" || type == "tabpfn"; }
};

struct EstimatorSpec {
  std::string name;
  std::string method;
  std::optional<PredictorSpec> base;
  std::optional<PredictorSpec> propensity;  // cate X/DR/R; default logistic
  double clip = 0.01;                       // cate DR/R/OracleR
  bool clean_labels = false;                // noise: train on uncorrupted labels
};

/// Union of generator arguments; each kind reads its own subset.
struct DgpSpec {
  // semisup
  SemiSupSetting setting = SemiSupSetting::Linear;
  std::size_t p = 5;
  std::size_t m = 1000;
  double tau = 0.5;
  std::size_t n_mc = 1000000;
  // shared
  std::size_t n = 500;
  std::size_t n_test = 1000;
  // cate
  CateSetup setup = CateSetup::A;
  double sigma2 = 1.0;
  // covshift
  MeanFn mean_fn = MeanFn::F1;
  std::size_t n_aux = 0;  // 0 means n
  std::vector<double> lambda_grid;  // empty means the default grid
  // noise
  NoiseModel noise_model = NoiseModel::M1;
  double rho = 0.0;
  // sparse
  std::size_t s = 1;
  BetaType beta_type = BetaType::I;
  CovType cov_type = CovType::Identity;
  double snr = 1.0;
  // probe
  ProbeKind probe = ProbeKind::Linear1D;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::Cate;
  DgpSpec dgp;
  std::vector<EstimatorSpec> estimators;
  std::size_t replicates = 1;
  std::vector<std::string> metrics;
  std::string reference;  // estimator that relative_mse divides by
  /// Also emit bias2[k] / variance[k] records per coefficient.
  bool per_component = false;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string notes;  // free text, not part of the hash

  /// Strict parse: unknown keys and ill-typed values raise ConfigError.
  static ExperimentConfig from_json(const std::string& text);
  /// Canonical JSON with every default spelled out.
  std::string to_json(bool include_unhashed = true) const;
  /// FNV-1a of the canonical JSON without output and notes.
  std::uint64_t hash() const;
  /// Throws ConfigError on the first problem found.
  void validate() const;
  /// Fills empty remote endpoints.
  void resolve_endpoints(const std::string& default_endpoint);
};

/// Applies dotted-path key=value overrides to a JSON document. Values that
/// parse as JSON are used as such, anything else as a string.
std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& overrides);

std::vector<std::string> allowed_metrics(ExperimentKind kind);
std::vector<std::string> allowed_methods(ExperimentKind kind);

/// Replicate id of records pooled over replicates (bias2, variance).
inline constexpr long kPooledReplicate = -1;

struct MetricsRecord {
  std::string experiment;
  long replicate = 0;
  std::string estimator;
  std::string metric;
  double value = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

struct ErrorRecord {
  std::string experiment;
  long replicate = 0;
  std::string estimator;
  std::string message;

  bool operator==(const ErrorRecord&) const = default;
};

/// Parameter vector behind bias2/variance: semisup theta or sparse surrogate coefficients.
struct ThetaRecord {
  std::string experiment;
  long replicate = 0;
  std::string estimator;
  std::vector<double> theta;

  bool operator==(const ThetaRecord&) const = default;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  std::vector<ErrorRecord> errors;
  std::vector<ThetaRecord> thetas;
  std::vector<double> theta_star;  // semisup: Monte-Carlo truth; sparse: ones on the support
  std::vector<std::string> notes;
};

/// Runs every replicate on up to `jobs` threads. Results do not depend on `jobs`.
RunResult run_replicated(const ExperimentConfig& config, unsigned jobs = 1);

struct AggregateRow {
  std::string experiment;
  std::string estimator;
  std::string metric;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double se = 0.0;  // sd / sqrt(count); NaN for a single value
};

/// Groups by (experiment, estimator, metric) in first-appearance order.
std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_records_jsonl(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_thetas_csv(std::ostream& out, const std::vector<ThetaRecord>& thetas);
void write_errors_csv(std::ostream& out, const std::vector<ErrorRecord>& errors);


}  // namespace workbench
