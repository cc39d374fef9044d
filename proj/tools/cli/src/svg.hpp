#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlsd::cli {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = false; // points instead of a line
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
};

/// Minimal static line chart; nonpositive values are dropped on a log axis.
void write_svg(std::ostream &out, const Chart &chart);

} // namespace nlsd::cli
