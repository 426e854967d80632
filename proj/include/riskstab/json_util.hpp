#pragma once

#include <initializer_list>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "riskstab/errors.hpp"

namespace riskstab::jsonu {

// std::map-backed, so dumps carry keys in sorted order: byte-stable output.
using Json = nlohmann::json;

Json matrix_json(const Eigen::MatrixXd& m);   // row-major nested arrays
Json vector_json(const Eigen::VectorXd& v);   // flat array
Eigen::MatrixXd matrix_from(const Json& j, const char* where);
Eigen::VectorXd vector_from(const Json& j, const char* where);

// Rejects unknown keys and missing required ones. `where` names the object
// in diagnostics.
void check_keys(const Json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const char* where);

double number_from(const Json& j, const char* where);

}  // namespace riskstab::jsonu
