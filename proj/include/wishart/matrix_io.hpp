#pragma once

// Matrix files: {"p": <int>, "data": [p*p row-major entries]}. Entries are JSON
// numbers or rational strings such as "3/2". Requires nlohmann/json.

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wishart/errors.hpp"
#include "wishart/rational.hpp"
#include "wishart/symmat.hpp"

namespace wishart::io {

using json = nlohmann::json;

struct LoadedMatrix {
  SymmetricMatrix value;
  std::vector<Rational> exact;  // row-major, exact where the file was exact
};

inline Rational entry_to_rational(const json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_number()) return rational_from_double(v.get<double>());
  throw InvalidInput("matrix entries must be numbers or rational strings");
}

inline LoadedMatrix matrix_from_json(const json& j, const Tolerances& tol = kDefaultTolerances) {
  if (!j.is_object() || !j.contains("p") || !j.contains("data")) {
    throw InvalidInput("matrix JSON needs fields \"p\" and \"data\"");
  }
  const int p = j.at("p").get<int>();
  if (p < 1) throw InvalidInput("matrix dimension p must be >= 1");
  const json& data = j.at("data");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(p) * p) {
    throw DimensionMismatch("matrix data must hold p*p = " + std::to_string(p * p) + " entries");
  }
  std::vector<Rational> exact;
  exact.reserve(data.size());
  Matrix m(p, p);
  for (std::size_t k = 0; k < data.size(); ++k) {
    exact.push_back(entry_to_rational(data[k]));
    m(static_cast<int>(k) / p, static_cast<int>(k) % p) =
        data[k].is_string() ? to_double(exact.back()) : data[k].get<double>();
  }
  return {SymmetricMatrix(m, tol), std::move(exact)};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("invalid JSON in '" + path + "': " + e.what());
  }
}

inline LoadedMatrix load_matrix(const std::string& path, const Tolerances& tol = kDefaultTolerances) {
  return matrix_from_json(read_json_file(path), tol);
}

/// A probe file is a JSON array of matrix objects (or a single matrix object).
inline std::vector<Matrix> load_probes(const std::string& path, const Tolerances& tol = kDefaultTolerances) {
  const json j = read_json_file(path);
  std::vector<Matrix> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(matrix_from_json(e, tol).value.matrix());
  } else {
    out.push_back(matrix_from_json(j, tol).value.matrix());
  }
  if (out.empty()) throw InvalidInput("probe file holds no matrices");
  return out;
}

inline json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"p", m.rows()}, {"data", data}};
}

}  // namespace wishart::io
