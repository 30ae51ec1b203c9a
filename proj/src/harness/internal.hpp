#pragma once

// Shared between the config parser and the runner.

#include "kahler/model.hpp"
#include "kahler/solver.hpp"

#include <json.hpp>

#include <string>

namespace kahler::detail {

int as_int(const nlohmann::json& j, const std::string& where);
SolverConfig solver_from(const nlohmann::json& s);
FitWindow window_from(const nlohmann::json& w);

}  // namespace kahler::detail
