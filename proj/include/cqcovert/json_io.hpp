#pragma once

#include <nlohmann/json.hpp>

#include "cqcovert/operator.hpp"

namespace cqcovert {

// Wire format: {"dim": d, "re": [[...]], "im": [[...]]}. "im" may be omitted
// on input for real matrices.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace cqcovert
