#include "nplab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nplab::svg {

namespace {
constexpr double W = 640, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
}

void write_loglog(const std::string& path, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel, const std::vector<Series>& series,
                  const std::vector<FittedLine>& lines) {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
            x_lo = std::min(x_lo, std::log10(s.x[i]));
            x_hi = std::max(x_hi, std::log10(s.x[i]));
            y_lo = std::min(y_lo, std::log10(s.y[i]));
            y_hi = std::max(y_hi, std::log10(s.y[i]));
        }
    if (!(x_hi >= x_lo)) {
        x_lo = 0;
        x_hi = 1;
        y_lo = 0;
        y_hi = 1;
    }
    if (x_hi - x_lo < 1e-9) x_hi = x_lo + 1;
    if (y_hi - y_lo < 1e-9) y_hi = y_lo + 1;

    auto px = [&](double lx) { return ML + (lx - x_lo) / (x_hi - x_lo) * (W - ML - MR); };
    auto py = [&](double ly) { return H - MB - (ly - y_lo) / (y_hi - y_lo) * (H - MT - MB); };

    std::ofstream os(path);
    if (!os) throw std::runtime_error("svg: cannot open " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title << "</text>\n";
    os << "<text x='" << W / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='13'>" << xlabel
       << " (log10)</text>\n";
    os << "<text x='16' y='" << H / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
       << H / 2 << ")'>" << ylabel << " (log10)</text>\n";
    os << "<rect x='" << ML << "' y='" << MT << "' width='" << W - ML - MR << "' height='" << H - MT - MB
       << "' fill='none' stroke='black'/>\n";

    // decade grid lines and labels
    for (int d = int(std::ceil(x_lo)); d <= int(std::floor(x_hi)); ++d) {
        os << "<line x1='" << px(d) << "' y1='" << MT << "' x2='" << px(d) << "' y2='" << H - MB
           << "' stroke='#dddddd'/>\n";
        os << "<text x='" << px(d) << "' y='" << H - MB + 16 << "' text-anchor='middle' font-size='11'>" << d
           << "</text>\n";
    }
    for (int d = int(std::ceil(y_lo)); d <= int(std::floor(y_hi)); ++d) {
        os << "<line x1='" << ML << "' y1='" << py(d) << "' x2='" << W - MR << "' y2='" << py(d)
           << "' stroke='#dddddd'/>\n";
        os << "<text x='" << ML - 8 << "' y='" << py(d) + 4 << "' text-anchor='end' font-size='11'>" << d
           << "</text>\n";
    }

    for (const auto& ln : lines) {
        const double yA = ln.intercept + ln.slope * x_lo, yB = ln.intercept + ln.slope * x_hi;
        os << "<line x1='" << px(x_lo) << "' y1='" << py(yA) << "' x2='" << px(x_hi) << "' y2='" << py(yB)
           << "' stroke='" << ln.color << "' stroke-width='1.5'/>\n";
    }
    int legend_y = int(MT) + 14;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
            os << "<circle cx='" << px(std::log10(s.x[i])) << "' cy='" << py(std::log10(s.y[i]))
               << "' r='3' fill='" << s.color << "'/>\n";
        }
        if (!s.name.empty()) {
            os << "<circle cx='" << W - MR - 150 << "' cy='" << legend_y - 4 << "' r='3' fill='" << s.color
               << "'/>\n";
            os << "<text x='" << W - MR - 140 << "' y='" << legend_y << "' font-size='11'>" << s.name
               << "</text>\n";
            legend_y += 16;
        }
    }
    os << "</svg>\n";
}

} // namespace nplab::svg
