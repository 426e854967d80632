#include "riskstab/json_util.hpp"

#include <algorithm>
#include <cmath>

namespace riskstab::jsonu {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::MatrixXd matrix_from(const Json& j, const char* where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigInvalid(std::string(where) + ": expected a nonempty array of rows");
  }
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) {
    throw ConfigInvalid(std::string(where) + ": rows must be nonempty arrays");
  }
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ConfigInvalid(std::string(where) + ": ragged matrix rows");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number_from(j[i][k], where);
    }
  }
  return m;
}

Eigen::VectorXd vector_from(const Json& j, const char* where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigInvalid(std::string(where) + ": expected a nonempty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number_from(j[i], where);
  }
  return v;
}

void check_keys(const Json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const char* where) {
  if (!obj.is_object()) {
    throw ConfigInvalid(std::string(where) + ": expected a JSON object");
  }
  for (const char* k : required) {
    if (!obj.contains(k)) {
      throw ConfigInvalid(std::string(where) + ": missing required key \"" + k + "\"");
    }
  }
  for (const auto& [key, _] : obj.items()) {
    const auto match = [&key](const char* k) { return key == k; };
    if (std::any_of(required.begin(), required.end(), match)) continue;
    if (std::any_of(optional.begin(), optional.end(), match)) continue;
    throw ConfigInvalid(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

double number_from(const Json& j, const char* where) {
  if (!j.is_number()) {
    throw ConfigInvalid(std::string(where) + ": expected a number");
  }
  const double x = j.get<double>();
  if (!std::isfinite(x)) {
    throw ConfigInvalid(std::string(where) + ": number must be finite");
  }
  return x;
}

}  // namespace riskstab::jsonu
