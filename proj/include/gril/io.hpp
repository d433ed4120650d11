#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gril/data.hpp"
#include "gril/error.hpp"
#include "gril/lars.hpp"
#include "gril/simulation.hpp"

namespace gril {

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty CSV input");
  for (const std::string& h : detail::split(line, ',')) t.header.push_back(detail::trim(h));
  const auto cols = static_cast<Index>(t.header.size());
  std::vector<double> flat;
  Index rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split(line, ',');
    if (static_cast<Index>(cells.size()) != cols) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                                        " fields, found " + std::to_string(cells.size()));
    }
    for (const std::string& c : cells) flat.push_back(detail::parse_double(c, "line " + std::to_string(lineno)));
    ++rows;
  }
  t.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), rows, cols);
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_csv(in);
}

struct NamedDataset {
  Dataset data;
  std::vector<std::string> predictors;
};

/// Response is the column named `response`, or the first column when no
/// header matches. Every other column is a predictor.
inline NamedDataset to_dataset(const CsvTable& t, const std::string& response = "y") {
  if (t.header.size() < 2) throw Error(ErrorCode::Parse, "need a response and at least one predictor column");
  auto it = std::find(t.header.begin(), t.header.end(), response);
  const auto ycol = it == t.header.end() ? Index{0} : static_cast<Index>(it - t.header.begin());
  NamedDataset out;
  out.data.y = t.values.col(ycol);
  out.data.x.resize(t.values.rows(), t.values.cols() - 1);
  Index k = 0;
  for (Index j = 0; j < t.values.cols(); ++j) {
    if (j == ycol) continue;
    out.data.x.col(k++) = t.values.col(j);
    out.predictors.push_back(t.header[static_cast<std::size_t>(j)]);
  }
  validate(out.data);
  return out;
}

inline NamedDataset read_dataset(const std::string& path, const std::string& response = "y") {
  return to_dataset(read_csv(path), response);
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  out << "y";
  for (Index j = 0; j < data.p(); ++j) out << ",x" << j + 1;
  out << '\n' << std::scientific << std::setprecision(17);
  for (Index i = 0; i < data.n(); ++i) {
    out << data.y[i];
    for (Index j = 0; j < data.p(); ++j) out << ',' << data.x(i, j);
    out << '\n';
  }
}

/// `predictor,coefficient`, one row per predictor, full precision.
inline void write_coefficients(std::ostream& out, const std::vector<std::string>& names, const Vector& beta) {
  out << "predictor,coefficient\n" << std::scientific << std::setprecision(17);
  for (Index j = 0; j < beta.size(); ++j) out << names[static_cast<std::size_t>(j)] << ',' << beta[j] << '\n';
}

/// One row per breakpoint: lambda1, then coefficients on the original scale.
inline void write_path(std::ostream& out, const std::vector<std::string>& names, const PathSolution& path,
                       const StandardizedDesign& design) {
  out << "lambda1";
  for (const std::string& n : names) out << ',' << n;
  out << '\n' << std::scientific << std::setprecision(17);
  for (Index k = 0; k < path.size(); ++k) {
    const Vector b = to_original_scale(design, path.coefs.col(k));
    out << path.breakpoints[static_cast<std::size_t>(k)];
    for (Index j = 0; j < b.size(); ++j) out << ',' << b[j];
    out << '\n';
  }
}

}  // namespace gril
