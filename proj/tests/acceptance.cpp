// Acceptance harness: runs the full verification matrix at the pinned
// resolutions and prints one pass/fail line per criterion. Exit code 0 only
// when every criterion passes.

#include <cstdio>
#include <cstring>
#include <string>

#include "nplab/suite.hpp"

int main(int argc, char** argv) {
    nplab::suite::SuiteConfig cfg;
    cfg.seed = 1;
    cfg.resolution_scale = 1.0;
    cfg.workers = 2;
    cfg.out_dir = "";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) cfg.resolution_scale = 2.0;
        if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) cfg.seed = std::strtoull(argv[++i], nullptr, 10);
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            std::string ids = argv[++i];
            std::size_t pos = 0;
            while (pos != std::string::npos) {
                const auto next = ids.find(',', pos);
                cfg.only.push_back(ids.substr(pos, next == std::string::npos ? next : next - pos));
                pos = next == std::string::npos ? next : next + 1;
            }
        }
        if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) cfg.out_dir = argv[++i];
    }

    const auto results = nplab::suite::run_suite(cfg);
    bool all = true;
    double total = 0.0;
    for (const auto& r : results) {
        std::printf("%s  %-20s %6.1fs  %s\n", r.pass ? "PASS" : "FAIL", r.id.c_str(), r.seconds,
                    r.details.c_str());
        all = all && r.pass;
        total += r.seconds;
    }
    std::printf("%s  %zu criteria in %.1fs\n", all ? "ACCEPTED" : "REJECTED", results.size(), total);
    return all ? 0 : 1;
}
