#include "workbench/dataset.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "workbench/error.hpp"

namespace workbench {

const Vector& Dataset::labels() const {
  if (!y) throw InvalidArgument("dataset has no labels");
  return *y;
}

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) {
    throw InvalidArgument("dataset must have at least one row and one column");
  }
  if (!x.allFinite()) throw InvalidArgument("dataset features contain NaN or Inf");
  if (y) {
    if (y->size() != x.rows()) {
      throw InvalidArgument("label length " + std::to_string(y->size()) +
                            " does not match row count " + std::to_string(x.rows()));
    }
    if (!y->allFinite()) throw InvalidArgument("dataset labels contain NaN or Inf");
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  }
  if (y) {
    Vector sub(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      sub(static_cast<Eigen::Index>(i)) = (*y)(static_cast<Eigen::Index>(idx[i]));
    }
    out.y = std::move(sub);
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.x.cols() != b.x.cols()) {
    throw InvalidArgument("cannot concatenate datasets with different column counts");
  }
  Dataset out;
  out.x.resize(a.x.rows() + b.x.rows(), a.x.cols());
  out.x << a.x, b.x;
  if (a.y && b.y) {
    Vector y(a.y->size() + b.y->size());
    y << *a.y, *b.y;
    out.y = std::move(y);
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Dataset& d) {
  for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
    if (j) out << ',';
    out << 'x' << (j + 1);
  }
  if (d.y) out << ",y";
  out << '\n';
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
      if (j) out << ',';
      out << format_double(d.x(i, j));
    }
    if (d.y) out << ',' << format_double((*d.y)(i));
    out << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty CSV input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const bool has_y = !header.empty() && header.back() == "y";
  const std::size_t p = header.size() - (has_y ? 1 : 0);
  if (p == 0) throw InvalidArgument("CSV header has no feature columns");
  for (std::size_t j = 0; j < p; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw InvalidArgument("unexpected CSV header column '" + header[j] + "'");
    }
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    if (count != header.size()) {
      throw InvalidArgument("CSV row " + std::to_string(rows + 1) + " has " +
                            std::to_string(count) + " cells, expected " +
                            std::to_string(header.size()));
    }
    ++rows;
  }

  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  Vector y(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * header.size() + j];
    }
    if (has_y) y(static_cast<Eigen::Index>(i)) = values[i * header.size() + p];
  }
  if (has_y) d.y = std::move(y);
  d.validate();
  return d;
}

}  // namespace workbench
