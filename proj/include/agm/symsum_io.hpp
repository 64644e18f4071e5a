#pragma once

#include <json.hpp>

#include "agm/symsum.hpp"

namespace agm::symsum {

/// {"n": n, "m": m, "ops": [[[re, im], ...], ...]} with each matrix flattened row-major.
nlohmann::json family_to_json(const OperatorFamily& fam);
OperatorFamily family_from_json(const nlohmann::json& doc);

}  // namespace agm::symsum
