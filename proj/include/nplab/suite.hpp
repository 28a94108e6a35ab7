#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace nplab::suite {

struct SuiteConfig {
    std::uint64_t seed = 1;
    double resolution_scale = 1.0; // > 1 coarsens the property checks that allow it
    std::string out_dir;           // artifacts written here when nonempty
    std::vector<std::string> only; // subset of check ids; empty = all
    int workers = 1;
    bool skip_rerun_check = false; // internal guard for the determinism rerun
};

struct CheckResult {
    std::string id;
    std::string name;
    bool pass = false;
    std::string details;
    nlohmann::json metrics;
    double seconds = 0.0;
};

// The verification matrix. Every entry is deterministic given (seed,
// resolution_scale); wall time is never part of the metrics.
std::vector<CheckResult> run_suite(const SuiteConfig& cfg);

// Canonical JSON report (no timing), byte-stable across reruns.
std::string suite_report_json(const std::vector<CheckResult>& results, const SuiteConfig& cfg);

std::vector<std::string> known_check_ids();

} // namespace nplab::suite
