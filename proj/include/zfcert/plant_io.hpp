#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "zfcert/plants.hpp"

namespace zfcert {

namespace detail {

inline Matrix parse_matrix(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ParseError("field '" + field + "' must be a nonempty array of rows");
  const size_t rows = j.size();
  if (!j[0].is_array()) throw ParseError("field '" + field + "' must be an array of rows");
  const size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError("field '" + field + "' row " + std::to_string(r) + " has the wrong length");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ParseError("field '" + field + "' entry (" + std::to_string(r) + "," + std::to_string(c) +
                         ") is not a number");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

inline void write_matrix(std::ostream& os, const Matrix& m) {
  char buf[40];
  os << "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << (r ? ", [" : "[");
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.16e", m(r, c));
      os << (c ? ", " : "") << buf;
    }
    os << "]";
  }
  os << "]";
}

inline void escape_json(std::ostream& os, const std::string& s) { os << nlohmann::json(s).dump(); }

}  // namespace detail

/// Parses a plant document {kind, d, label, vertices: [{A, B, C}]}.
inline PlantModel parse_plant(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("plant file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("plant file must be a JSON object");
  for (const char* key : {"kind", "d", "vertices"})
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  if (!j["kind"].is_string()) throw ParseError("field 'kind' must be a string");
  const std::string kind = j["kind"];
  PlantModel p;
  if (kind == "lti")
    p.kind = PlantKind::Lti;
  else if (kind == "lpv")
    p.kind = PlantKind::LpvPolytopic;
  else
    throw ParseError("field 'kind' must be \"lti\" or \"lpv\"");
  if (!j["d"].is_number_integer() || j["d"].get<int>() < 1) throw ParseError("field 'd' must be a positive integer");
  p.d = j["d"];
  p.label = j.value("label", std::string("plant"));
  if (!j["vertices"].is_array() || j["vertices"].empty()) throw ParseError("field 'vertices' must be a nonempty array");
  for (size_t k = 0; k < j["vertices"].size(); ++k) {
    const auto& v = j["vertices"][k];
    const std::string where = "vertices[" + std::to_string(k) + "].";
    if (!v.is_object()) throw ParseError("field 'vertices[" + std::to_string(k) + "]' must be an object");
    for (const char* key : {"A", "B", "C"})
      if (!v.contains(key)) throw ParseError("missing field '" + where + key + "'");
    Matrix a = detail::parse_matrix(v["A"], where + "A");
    Matrix b = detail::parse_matrix(v["B"], where + "B");
    Matrix c = detail::parse_matrix(v["C"], where + "C");
    try {
      p.vertices.emplace_back(a, b, c, Matrix::Zero(c.rows(), b.cols()));
    } catch (const DimensionError& e) {
      throw ValidationError(where + "dimensions: " + e.what());
    }
  }
  p.validate();
  return p;
}

inline PlantModel load_plant(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open plant file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plant(ss.str());
}

/// Writes every number with 17 significant digits, so loading reproduces the
/// matrices bit for bit.
inline void write_plant(std::ostream& os, const PlantModel& p) {
  os << "{\n  \"kind\": \"" << (p.kind == PlantKind::Lti ? "lti" : "lpv") << "\",\n  \"d\": " << p.d
     << ",\n  \"label\": ";
  detail::escape_json(os, p.label);
  os << ",\n  \"vertices\": [";
  for (size_t k = 0; k < p.vertices.size(); ++k) {
    const auto& v = p.vertices[k];
    os << (k ? ",\n    {" : "\n    {") << "\"A\": ";
    detail::write_matrix(os, v.a);
    os << ",\n     \"B\": ";
    detail::write_matrix(os, v.b);
    os << ",\n     \"C\": ";
    detail::write_matrix(os, v.c);
    os << "}";
  }
  os << "\n  ]\n}\n";
}

inline void save_plant(const PlantModel& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write plant file '" + path + "'");
  write_plant(out, p);
}

}  // namespace zfcert
