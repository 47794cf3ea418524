#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace workbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Feature matrix plus optional labels; the sample container used everywhere.
struct Dataset {
  Matrix x;
  std::optional<Vector> y;

  Dataset() = default;
  explicit Dataset(Matrix features) : x(std::move(features)) {}
  Dataset(Matrix features, Vector labels) : x(std::move(features)), y(std::move(labels)) {}

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  bool labeled() const { return y.has_value(); }

  /// Labels, throwing InvalidArgument when the dataset is unlabeled.
  const Vector& labels() const;

  /// Throws InvalidArgument on NaN/Inf, empty shape, or label length mismatch.
  void validate() const;

  /// Rows selected by index, preserving order.
  Dataset subset(const std::vector<std::size_t>& rows) const;

  /// Same features with the labels dropped.
  Dataset unlabeled() const { return Dataset(x); }
};

/// Vertically stacks two datasets with matching column counts. The result is
/// labeled only when both inputs are.
Dataset concat(const Dataset& a, const Dataset& b);

/// CSV with header `x1,...,xp[,y]` and `%.17g` numbers.
void write_csv(std::ostream& out, const Dataset& d);
Dataset read_csv(std::istream& in);

/// Shortest round-trip decimal form used by every CSV writer in the project.
std::string format_double(double v);

}  // namespace workbench
