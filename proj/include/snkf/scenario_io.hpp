#pragma once

#include <string>

#include "snkf/alloc.hpp"
#include "snkf/core.hpp"
#include "snkf/nocsi.hpp"

namespace snkf::io {

/// Scenario document:
///   {a, sigma_w2, sigma_n2, sensors: [{c, sigma_v2}], channels: [h | [re, im]]}
/// Unknown fields are rejected. Channel entries must be uniformly real
/// magnitudes or uniformly [re, im] pairs.
Scenario parse_scenario(const std::string& text, bool allow_zero_receiver_noise = false);
Scenario load_scenario(const std::string& path, bool allow_zero_receiver_noise = false);

/// Statistics document: {sensors: [{mean_re, mean_im, var_re, var_im,
/// e2_re?, e2_im?}]}. Second moments default to the Gaussian values.
nocsi::ChannelStatistics parse_statistics(const std::string& text);
nocsi::ChannelStatistics load_statistics(const std::string& path);

/// Solution document: {alphas_sq, powers, total_power, lambda, mu?, M1?,
/// constraint_value}.
std::string solution_to_json(const alloc::AllocationSolution& solution);

}  // namespace snkf::io
