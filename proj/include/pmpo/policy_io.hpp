#pragma once

// Policy documents:
//   {"family": "gaussian" | "categorical" | "autoregressive",
//    "dimensions": {...family specific sizes...},
//    "parameters": ["<17 significant digit decimal>", ...]}
// Parameters are stored in ParamVector layout as decimal strings so that a
// write/read cycle reproduces every bit.

#include "pmpo/policy.hpp"

#include <json.hpp>

#include <string>

namespace pmpo {

nlohmann::json policy_to_json(const AnyPolicy& policy);
AnyPolicy policy_from_json(const nlohmann::json& doc);

std::string policy_to_string(const AnyPolicy& policy);
AnyPolicy policy_from_string(const std::string& text);

}  // namespace pmpo
