#pragma once

#include <string>
#include <vector>

namespace nplab::svg {

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
};

struct FittedLine {
    double slope = 0.0, intercept = 0.0; // in log10 coordinates
    std::string color = "#d62728";
};

// Log-log scatter with an optional fitted line; self-contained SVG, no
// plotting dependency. Nonpositive points are dropped.
void write_loglog(const std::string& path, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel, const std::vector<Series>& series,
                  const std::vector<FittedLine>& lines = {});

} // namespace nplab::svg
