#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aperture {

struct PropertyResult {
    std::string suite;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Runs the property suite of one module ("operators", "solver",
/// "regularity", "goodsets") or all of them ("all"). Throws
/// ValidationError("suite") for any other name.
std::vector<PropertyResult> verify_suite(const std::string& suite, std::uint64_t seed = 1);

/// Fixed-width pass/fail table, one line per property.
std::string format_results(const std::vector<PropertyResult>& results);

}  // namespace aperture
