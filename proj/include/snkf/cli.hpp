#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace snkf::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Full command dispatch. Exit codes: 0 success, 2 invalid configuration,
/// 3 infeasible problem.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace snkf::cli
