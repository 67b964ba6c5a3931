#include "cqcovert/json_io.hpp"

#include <string>

namespace cqcovert {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json rr = nlohmann::json::array();
    nlohmann::json ri = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ri.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

namespace {

void read_part(const nlohmann::json& rows, Index dim, const char* field, Matrix& out, bool imag) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != dim) {
    throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must have dim rows");
  }
  for (Index i = 0; i < dim; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != dim) {
      throw Error(ErrorKind::ParseError,
                  std::string("field '") + field + "' row " + std::to_string(i) +
                      " must have dim entries");
    }
    for (Index j = 0; j < dim; ++j) {
      const auto& v = row[static_cast<std::size_t>(j)];
      if (!v.is_number()) {
        throw Error(ErrorKind::ParseError, std::string("field '") + field + "' has a non-number");
      }
      if (imag) out(i, j).imag(v.get<double>());
      else out(i, j).real(v.get<double>());
    }
  }
}

}  // namespace

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "matrix must be a JSON object");
  if (!j.contains("re")) throw Error(ErrorKind::ParseError, "matrix missing field 're'");
  Index dim = 0;
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1) {
      throw Error(ErrorKind::ParseError, "field 'dim' must be a positive integer");
    }
    dim = static_cast<Index>(j["dim"].get<long long>());
  } else if (j["re"].is_array()) {
    dim = static_cast<Index>(j["re"].size());
  }
  if (dim < 1) throw Error(ErrorKind::ParseError, "matrix dimension must be >= 1");
  Matrix m = Matrix::Zero(dim, dim);
  read_part(j["re"], dim, "re", m, false);
  if (j.contains("im")) read_part(j["im"], dim, "im", m, true);
  return m;
}

}  // namespace cqcovert
