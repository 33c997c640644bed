#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stealth_lqr/model.hpp"

namespace stealth_lqr {

using json = nlohmann::json;

/// Raised for malformed JSON text; carries 1-based line and column.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : ValidationError(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

namespace detail {

inline int json_depth(const json& j) {
  if (!j.is_array()) return 0;
  if (j.empty()) return 1;
  return 1 + json_depth(j.front());
}

inline double as_number(const json& j, const std::string& name) {
  if (!j.is_number()) throw ValidationError(name + ": expected a number");
  return j.get<double>();
}

/// Row-major nested array; a bare number is accepted for 1x1.
inline Matrix matrix_from_json(const json& j, int n, const std::string& name) {
  if (j.is_number()) {
    if (n != 1) throw ValidationError(name + ": scalar given but n=" + std::to_string(n));
    return Matrix::Constant(1, 1, j.get<double>());
  }
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ValidationError(name + ": expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ValidationError(name + ": row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c) m(r, c) = as_number(row[c], name);
  }
  return m;
}

inline Vector vector_from_json(const json& j, int size, const std::string& name) {
  if (j.is_number()) {
    if (size != 1) throw ValidationError(name + ": scalar given but length " + std::to_string(size) + " expected");
    return Vector::Constant(1, j.get<double>());
  }
  if (!j.is_array() || static_cast<int>(j.size()) != size)
    throw ValidationError(name + ": expected an array of length " + std::to_string(size));
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = as_number(j[i], name);
  return v;
}

/// A matrix sequence is either one matrix (broadcast) or a list of `len` matrices.
/// For n = 1 a flat array of `len` numbers is a list; a flat array of one number broadcasts.
inline std::vector<Matrix> matrix_sequence(const json& j, int n, int len, const std::string& name) {
  const int depth = json_depth(j);
  auto broadcast = [&](const json& one) {
    return std::vector<Matrix>(static_cast<std::size_t>(len), matrix_from_json(one, n, name));
  };
  auto check_len = [&] {
    if (static_cast<int>(j.size()) != len)
      throw ValidationError(name + ": length must be " + std::to_string(len) + ", got " + std::to_string(j.size()));
  };
  if (depth == 0 || depth == 2) return broadcast(j);
  if (depth == 1 && n == 1) {
    if (j.size() == 1 && len != 1) return broadcast(j[0]);
    check_len();
  } else if (depth == 3) {
    check_len();
  } else {
    throw ValidationError(name + ": unrecognised sequence layout");
  }
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) out.push_back(matrix_from_json(j[t], n, name + "[" + std::to_string(t) + "]"));
  return out;
}

/// A vector sequence is either one vector (broadcast) or a list of `len` vectors.
/// For n = 1 a flat array of `len` numbers is a list; a flat array of one number broadcasts.
inline std::vector<Vector> vector_sequence(const json& j, int n, int len, const std::string& name) {
  const int depth = json_depth(j);
  auto broadcast = [&](const json& one) {
    return std::vector<Vector>(static_cast<std::size_t>(len), vector_from_json(one, n, name));
  };
  if (depth == 0) return broadcast(j);
  if (depth == 1) {
    if (n == 1) {
      if (static_cast<int>(j.size()) == len) {
        std::vector<Vector> out;
        for (int t = 0; t < len; ++t) out.push_back(vector_from_json(j[t], 1, name));
        return out;
      }
      if (j.size() == 1) return broadcast(j[0]);
      throw ValidationError(name + ": length must be " + std::to_string(len) + ", got " + std::to_string(j.size()));
    }
    return broadcast(j);
  }
  if (depth == 2) {
    if (static_cast<int>(j.size()) != len)
      throw ValidationError(name + ": length must be " + std::to_string(len) + ", got " + std::to_string(j.size()));
    std::vector<Vector> out;
    for (int t = 0; t < len; ++t) out.push_back(vector_from_json(j[t], n, name + "[" + std::to_string(t) + "]"));
    return out;
  }
  throw ValidationError(name + ": unrecognised sequence layout");
}

inline const json& require_key(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
  return j.at(key);
}

inline void line_column(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace detail

/// Builds a ProblemSpec from the problem-file object (not yet validated).
/// Sequences may be given in full or as a single broadcast entry.
inline ProblemSpec spec_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ValidationError("problem file: top level must be an object");
  ProblemSpec s;
  const json& jn = require_key(j, "n");
  const json& jt = require_key(j, "T");
  if (!jn.is_number_integer() || jn.get<long long>() < 1) throw ValidationError("n must be a positive integer");
  if (!jt.is_number_integer() || jt.get<long long>() < 0) throw ValidationError("T must be a nonnegative integer");
  s.n = jn.get<int>();
  s.T = jt.get<int>();
  s.sigma_z2 = matrix_from_json(require_key(j, "sigma_z2"), s.n, "sigma_z2");
  s.sigma_y2 = matrix_from_json(require_key(j, "sigma_y2"), s.n, "sigma_y2");
  s.x0 = vector_from_json(require_key(j, "x0"), 2 * s.n, "x0");
  s.R_alpha = matrix_from_json(require_key(j, "R_alpha"), s.n, "R_alpha");
  s.R_beta = matrix_from_json(require_key(j, "R_beta"), s.n, "R_beta");
  s.R_v = matrix_from_json(require_key(j, "R_v"), s.n, "R_v");
  s.T_v = matrix_from_json(require_key(j, "T_v"), s.n, "T_v");
  s.vbar = vector_sequence(require_key(j, "vbar"), s.n, s.T + 1, "vbar");
  const json& pat = require_key(j, "pattern");
  if (!pat.is_object()) throw ValidationError("pattern must be an object with Fb, Fc, fd");
  s.pattern.Fb = matrix_sequence(require_key(pat, "Fb"), s.n, s.T, "pattern.Fb");
  s.pattern.Fc = matrix_sequence(require_key(pat, "Fc"), s.n, s.T, "pattern.Fc");
  s.pattern.fd = vector_sequence(require_key(pat, "fd"), s.n, s.T, "pattern.fd");
  s.lambda = as_number(require_key(j, "lambda"), "lambda");
  return s;
}

/// Fully explicit serialization (every sequence written out in full).
inline json spec_to_json(const ProblemSpec& s) {
  using namespace detail;
  json j;
  j["n"] = s.n;
  j["T"] = s.T;
  j["sigma_z2"] = matrix_to_json(s.sigma_z2);
  j["sigma_y2"] = matrix_to_json(s.sigma_y2);
  j["x0"] = vector_to_json(s.x0);
  j["R_alpha"] = matrix_to_json(s.R_alpha);
  j["R_beta"] = matrix_to_json(s.R_beta);
  j["R_v"] = matrix_to_json(s.R_v);
  j["T_v"] = matrix_to_json(s.T_v);
  json vb = json::array();
  for (const auto& v : s.vbar) vb.push_back(vector_to_json(v));
  j["vbar"] = vb;
  json fb = json::array(), fc = json::array(), fd = json::array();
  for (const auto& m : s.pattern.Fb) fb.push_back(matrix_to_json(m));
  for (const auto& m : s.pattern.Fc) fc.push_back(matrix_to_json(m));
  for (const auto& v : s.pattern.fd) fd.push_back(vector_to_json(v));
  j["pattern"] = {{"Fb", fb}, {"Fc", fc}, {"fd", fd}};
  j["lambda"] = s.lambda;
  return j;
}

/// Parses JSON text, reporting syntax errors with line and column.
inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 0, col = 0;
    detail::line_column(text, e.byte, line, col);
    std::ostringstream os;
    os << "JSON parse error at line " << line << ", column " << col << ": " << e.what();
    throw ParseError(os.str(), line, col);
  }
}

inline ProblemSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open problem file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const json j = parse_json_text(buf.str());
  if (j.is_object() && j.contains("problem") && j["problem"].is_object()) return spec_from_json(j["problem"]);
  return spec_from_json(j);
}

}  // namespace stealth_lqr
