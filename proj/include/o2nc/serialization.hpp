#pragma once

#include "o2nc/engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace o2nc {

// Shortest text that reads back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

// RunResult <-> JSON.  Non-finite numbers are written as null and read back as NaN.
nlohmann::json to_json(const RunResult& run);
RunResult run_result_from_json(const nlohmann::json& j);

// One row per episode:
// k,regret,comparator_norm,grad_norm_at_wbar,f_end,eta_start,eta_min,eta_max,eta_mean,
// sq_error_sum,local_l1_max,max_delta_norm
std::string episode_csv(const RunResult& run);

// Fixed summary column order.
const std::vector<std::string>& summary_columns();
std::string summary_header();
// No trailing newline.  Wall time is left out so rows are reproducible.
std::string summary_row(const RunResult& run);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace o2nc
