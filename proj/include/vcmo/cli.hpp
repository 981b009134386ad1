#pragma once

#include <string>
#include <vector>

namespace vcmo {

inline constexpr const char* kVersion = "0.1.0";

// Command dispatch for: fit, sweep, tune, regions, pn, export-preset.
// Returns 0 on success, 1 on usage errors, 2 on data or convergence errors.
// Data lands in files only; diagnostics go to stderr. A JSON run summary
// (inputs, versions, timings, applied defaults) is written next to each
// output as <output>.run.json.
int run_command(const std::vector<std::string>& argv);

}  // namespace vcmo
